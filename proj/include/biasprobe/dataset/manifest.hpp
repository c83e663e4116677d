#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace biasprobe::dataset {

// Binary subject attribute under audit (A/B stand for male/female in the
// original study).
enum class Attribute { A, B };
enum class Pose { left, right, front };

std::string_view attribute_name(Attribute a);
Attribute parse_attribute(std::string_view s);
Attribute other(Attribute a);
std::string_view pose_name(Pose p);
Pose parse_pose(std::string_view s);

struct FaceRecord {
  std::string id;
  std::string subject_id;
  Attribute attribute = Attribute::A;
  Pose pose = Pose::front;
  std::string session;
  // Absolute path, resolved against the manifest directory on load.
  std::filesystem::path image_path;
};

// A side-pose record and the frontal record of the same subject and session.
// The pair id is the side record id.
struct FacePair {
  std::string id;
  std::string side_id;
  std::string front_id;
};

class FacePairManifest {
 public:
  FacePairManifest() = default;
  FacePairManifest(std::vector<FaceRecord> records, int resolution,
                   std::filesystem::path source = {});

  const std::vector<FaceRecord>& records() const { return records_; }
  const std::vector<FacePair>& pairs() const { return pairs_; }
  int resolution() const { return resolution_; }
  const std::filesystem::path& source() const { return source_; }

  const FaceRecord& record(const std::string& id) const;
  const FacePair& pair(const std::string& id) const;
  bool has_pair(const std::string& id) const { return pair_index_.count(id) != 0; }
  Attribute pair_attribute(const std::string& pair_id) const;
  Pose pair_pose(const std::string& pair_id) const;
  // The opposite side-pose pair of the same subject and session, if any.
  const FacePair* mirror_pair(const std::string& pair_id) const;

 private:
  std::vector<FaceRecord> records_;
  std::vector<FacePair> pairs_;
  int resolution_ = 0;
  std::filesystem::path source_;
  std::map<std::string, std::size_t> record_index_;
  std::map<std::string, std::size_t> pair_index_;
};

// CSV header: id,subject_id,attribute,pose,session,image_path. Image paths
// may be relative to the manifest. Every image is decoded and must be square
// with the same side length, which becomes the manifest resolution.
FacePairManifest load_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const std::vector<FaceRecord>& records);

}  // namespace biasprobe::dataset
