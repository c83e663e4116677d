#include "biasprobe/dataset/manifest.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "biasprobe/dataset/image.hpp"
#include "biasprobe/error.hpp"

namespace biasprobe::dataset {
namespace fs = std::filesystem;

namespace {

constexpr const char* kHeader = "id,subject_id,attribute,pose,session,image_path";

// RFC 4180-style field splitting (quoted fields may contain commas and "").
std::vector<std::string> split_csv_line(const std::string& line, bool* ok) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  *ok = true;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += ch;
      }
    } else if (ch == '"' && field.empty()) {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field += ch;
    }
  }
  if (quoted) *ok = false;
  fields.push_back(std::move(field));
  return fields;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string_view attribute_name(Attribute a) { return a == Attribute::A ? "A" : "B"; }

Attribute parse_attribute(std::string_view s) {
  if (s == "A") return Attribute::A;
  if (s == "B") return Attribute::B;
  throw DatasetError("attribute must be A or B, got '" + std::string(s) + "'");
}

Attribute other(Attribute a) { return a == Attribute::A ? Attribute::B : Attribute::A; }

std::string_view pose_name(Pose p) {
  switch (p) {
    case Pose::left: return "left";
    case Pose::right: return "right";
    case Pose::front: return "front";
  }
  return "front";
}

Pose parse_pose(std::string_view s) {
  if (s == "left") return Pose::left;
  if (s == "right") return Pose::right;
  if (s == "front") return Pose::front;
  throw DatasetError("pose must be left, right or front, got '" + std::string(s) + "'");
}

FacePairManifest::FacePairManifest(std::vector<FaceRecord> records, int resolution, fs::path source)
    : records_(std::move(records)), resolution_(resolution), source_(std::move(source)) {
  if (resolution_ <= 0) throw DatasetError("manifest resolution must be positive");
  for (std::size_t i = 0; i < records_.size(); ++i) {
    if (!record_index_.emplace(records_[i].id, i).second)
      throw DatasetError("duplicate record id '" + records_[i].id + "'");
  }
  // Front record per (subject, session).
  std::map<std::pair<std::string, std::string>, const FaceRecord*> fronts;
  for (const auto& r : records_) {
    if (r.pose != Pose::front) continue;
    auto key = std::make_pair(r.subject_id, r.session);
    if (!fronts.emplace(key, &r).second)
      throw DatasetError("subject '" + r.subject_id + "' session '" + r.session +
                         "' has more than one front record (second: '" + r.id + "')");
  }
  for (const auto& r : records_) {
    if (r.pose == Pose::front) continue;
    auto it = fronts.find({r.subject_id, r.session});
    if (it == fronts.end())
      throw DatasetError("unpaired side record '" + r.id + "': no front image for subject '" +
                         r.subject_id + "' session '" + r.session + "'");
    if (it->second->attribute != r.attribute)
      throw DatasetError("record '" + r.id + "' disagrees with its front record on attribute");
    pair_index_.emplace(r.id, pairs_.size());
    pairs_.push_back(FacePair{r.id, r.id, it->second->id});
  }
}

const FaceRecord& FacePairManifest::record(const std::string& id) const {
  auto it = record_index_.find(id);
  if (it == record_index_.end()) throw DatasetError("unknown record id '" + id + "'");
  return records_[it->second];
}

const FacePair& FacePairManifest::pair(const std::string& id) const {
  auto it = pair_index_.find(id);
  if (it == pair_index_.end()) throw DatasetError("unknown pair id '" + id + "'");
  return pairs_[it->second];
}

Attribute FacePairManifest::pair_attribute(const std::string& pair_id) const {
  return record(pair(pair_id).side_id).attribute;
}

Pose FacePairManifest::pair_pose(const std::string& pair_id) const {
  return record(pair(pair_id).side_id).pose;
}

const FacePair* FacePairManifest::mirror_pair(const std::string& pair_id) const {
  const FacePair& p = pair(pair_id);
  const FaceRecord& side = record(p.side_id);
  const Pose want = side.pose == Pose::left ? Pose::right : Pose::left;
  for (const auto& q : pairs_) {
    if (q.front_id != p.front_id) continue;
    if (record(q.side_id).pose == want) return &q;
  }
  return nullptr;
}

FacePairManifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DatasetError("manifest not found: " + path.string());
  const fs::path base = fs::absolute(path).parent_path();

  std::string line;
  if (!std::getline(in, line)) throw DatasetError(path.string() + ": empty manifest");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);
  if (line != kHeader)
    throw DatasetError(path.string() + ": header must be '" + std::string(kHeader) + "', got '" + line + "'");

  std::vector<FaceRecord> records;
  int resolution = 0;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = path.string() + " row " + std::to_string(row);
    bool ok = true;
    const auto f = split_csv_line(line, &ok);
    if (!ok || f.size() != 6)
      throw DatasetError(where + ": expected 6 fields, got " + std::to_string(f.size()) + " in '" + line + "'");
    FaceRecord r;
    r.id = f[0];
    r.subject_id = f[1];
    if (r.id.empty() || r.subject_id.empty()) throw DatasetError(where + ": empty id or subject_id");
    try {
      r.attribute = parse_attribute(f[2]);
      r.pose = parse_pose(f[3]);
    } catch (const DatasetError& e) {
      throw DatasetError(where + ": " + e.what());
    }
    r.session = f[4];
    r.image_path = fs::path(f[5]).is_absolute() ? fs::path(f[5]) : base / f[5];
    if (!fs::exists(r.image_path))
      throw DatasetError(where + ": image path does not exist: " + r.image_path.string());
    Image img;
    try {
      img = read_png(r.image_path);
    } catch (const DatasetError& e) {
      throw DatasetError(where + ": image does not decode: " + e.what());
    }
    if (img.width != img.height)
      throw DatasetError(where + ": image " + r.image_path.string() + " is not square");
    if (resolution == 0) resolution = img.width;
    if (img.width != resolution)
      throw DatasetError(where + ": image " + r.image_path.string() + " is " + std::to_string(img.width) +
                         " px, manifest resolution is " + std::to_string(resolution));
    records.push_back(std::move(r));
  }
  if (records.empty()) throw DatasetError(path.string() + ": manifest has no records");
  try {
    return FacePairManifest(std::move(records), resolution, fs::absolute(path));
  } catch (const DatasetError& e) {
    throw DatasetError(path.string() + ": " + e.what());
  }
}

void write_manifest(const fs::path& path, const std::vector<FaceRecord>& records) {
  std::ofstream out(path);
  if (!out) throw DatasetError("cannot write manifest " + path.string());
  const fs::path base = fs::absolute(path).parent_path();
  out << kHeader << '\n';
  for (const auto& r : records) {
    fs::path p = r.image_path;
    if (p.is_absolute()) {
      const fs::path rel = p.lexically_relative(base);
      if (!rel.empty() && *rel.begin() != "..") p = rel;
    }
    out << csv_escape(r.id) << ',' << csv_escape(r.subject_id) << ',' << attribute_name(r.attribute) << ','
        << pose_name(r.pose) << ',' << csv_escape(r.session) << ',' << csv_escape(p.generic_string()) << '\n';
  }
  if (!out) throw DatasetError("failed writing manifest " + path.string());
}

}  // namespace biasprobe::dataset
