#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "biasprobe/dataset/image.hpp"
#include "biasprobe/dataset/manifest.hpp"
#include "biasprobe/dataset/preprocess.hpp"
#include "biasprobe/dataset/probes.hpp"
#include "biasprobe/dataset/rgb_stats.hpp"
#include "biasprobe/dataset/split.hpp"
#include "biasprobe/dataset/synthetic.hpp"
#include "biasprobe/error.hpp"
#include "biasprobe/evaluation/stub_classifier.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace biasprobe;
using namespace biasprobe::dataset;
using biasprobe::testing::slurp;
using biasprobe::testing::TempDir;

namespace {

// Records only; images are never touched by split construction.
FacePairManifest pool_manifest(int n_a, int n_b) {
  std::vector<FaceRecord> records;
  auto add = [&](const std::string& subject, Attribute a) {
    records.push_back({subject + "_front", subject, a, Pose::front, "1", {}});
    records.push_back({subject + "_left", subject, a, Pose::left, "1", {}});
  };
  for (int i = 0; i < n_a; ++i) add("a" + std::to_string(i), Attribute::A);
  for (int i = 0; i < n_b; ++i) add("b" + std::to_string(i), Attribute::B);
  return FacePairManifest(std::move(records), 32);
}

SplitSpec spec(int maj, int min, int cap, std::uint64_t seed = 0) {
  SplitSpec s;
  s.name = std::to_string(maj) + std::to_string(min);
  s.ratio_majority = maj;
  s.ratio_minority = min;
  s.majority_cap = cap;
  s.seed = seed;
  return s;
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

}  // namespace

TEST_CASE("split counts reproduce the training-set table") {
  const auto start = std::chrono::steady_clock::now();
  const FacePairManifest m = pool_manifest(1454, 880);
  const std::pair<int, int> ratios[] = {{10, 0}, {9, 1}, {8, 2}, {7, 3}, {6, 4}, {5, 5}};
  const SplitCounts expected[] = {{1454, 0}, {1454, 162}, {1454, 364}, {1454, 624}, {1320, 880}, {880, 880}};
  for (int i = 0; i < 6; ++i) {
    const TrainSplit s = build_split(m, spec(ratios[i].first, ratios[i].second, 1454), {});
    CHECK(SplitCounts{s.majority_count, s.minority_count} == expected[i]);
    CHECK(static_cast<int>(s.pair_ids.size()) == expected[i].majority + expected[i].minority);
  }
  CHECK(std::chrono::steady_clock::now() - start < std::chrono::seconds(1));
}

TEST_CASE("small pool clamps") {
  const TrainSplit s = build_split(pool_manifest(10, 10), spec(6, 4, 1320), {});
  CHECK(s.majority_count == 10);
  CHECK(s.minority_count == 7);
  for (const auto& id : s.majority_ids()) CHECK(id[0] == 'a');
  for (const auto& id : s.minority_ids()) CHECK(id[0] == 'b');
}

TEST_CASE("split errors") {
  CHECK_THROWS_AS(build_split(pool_manifest(5, 5), spec(0, 10, 10), {}), DatasetError);
  const FacePairManifest m = pool_manifest(2, 0);
  std::set<std::string> all;
  for (const auto& p : m.pairs()) all.insert(p.id);
  CHECK_THROWS_AS(build_split(m, spec(5, 5, 10), all), DatasetError);
}

TEST_CASE("split properties") {
  const FacePairManifest m = pool_manifest(300, 200);
  std::set<std::string> test_ids;
  for (int i = 0; i < 20; ++i) {
    test_ids.insert("a" + std::to_string(i) + "_left");
    test_ids.insert("b" + std::to_string(i) + "_left");
  }
  for (int maj = 1; maj <= 10; ++maj) {
    const int min = 10 - maj;
    for (int cap : {7, 50, 280, 1000}) {
      const SplitSpec sp = spec(maj, min, cap, 99);
      const TrainSplit a = build_split(m, sp, test_ids);
      const TrainSplit b = build_split(m, sp, test_ids);
      CHECK(a.pair_ids == b.pair_ids);
      for (const auto& id : a.pair_ids) CHECK(test_ids.count(id) == 0);
      CHECK(std::set<std::string>(a.pair_ids.begin(), a.pair_ids.end()).size() == a.pair_ids.size());
      if (min > 0 && a.majority_count > 0) {
        const double got = static_cast<double>(a.minority_count) / a.majority_count;
        CHECK(std::abs(got - static_cast<double>(min) / maj) <= 1.0 / a.majority_count + 1e-12);
      }
    }
  }
  // Different seeds pick different subsets.
  CHECK(build_split(m, spec(5, 5, 50, 1), {}).pair_ids != build_split(m, spec(5, 5, 50, 2), {}).pair_ids);
}

TEST_CASE("split json round trip") {
  TempDir dir("bp-split");
  const FacePairManifest base = pool_manifest(4, 4);
  const FacePairManifest m(base.records(), 32, dir / "manifest.csv");
  const TrainSplit s = build_split(m, spec(7, 3, 4, 5), {});
  const auto file = write_split(m, s);
  CHECK(file == dir / "split_73.json");
  const TrainSplit back = read_split(file);
  CHECK(back.pair_ids == s.pair_ids);
  CHECK(back.majority_count == s.majority_count);
  CHECK(back.spec.seed == 5u);
}

TEST_CASE("manifest loading") {
  TempDir dir("bp-manifest");
  std::filesystem::create_directories(dir / "img");
  for (const char* n : {"f", "l", "r"}) write_png(dir / (std::string("img/") + n + ".png"), Image(16, 16, 100));
  const std::string header = "id,subject_id,attribute,pose,session,image_path\n";
  write_text(dir / "m.csv", header + "s1f,s1,A,front,1,img/f.png\ns1l,s1,A,left,1,img/l.png\ns1r,s1,A,right,1,img/r.png\n");
  const FacePairManifest m = load_manifest(dir / "m.csv");
  CHECK(m.pairs().size() == 2);
  CHECK(m.resolution() == 16);
  CHECK(m.pair_pose("s1l") == Pose::left);
  REQUIRE(m.mirror_pair("s1l"));
  CHECK(m.mirror_pair("s1l")->id == "s1r");

  write_text(dir / "missing.csv", header + "s1f,s1,A,front,1,img/f.png\ns1l,s1,A,left,1,img/nothere.png\n");
  try {
    load_manifest(dir / "missing.csv");
    FAIL("expected an error");
  } catch (const DatasetError& e) {
    CHECK(std::string(e.what()).find("nothere.png") != std::string::npos);
  }
  write_text(dir / "bad.csv", header + "s1f,s1,A,front,1\n");
  try {
    load_manifest(dir / "bad.csv");
    FAIL("expected an error");
  } catch (const DatasetError& e) {
    CHECK(std::string(e.what()).find("row 2") != std::string::npos);
  }
  write_text(dir / "unpaired.csv", header + "s2l,s2,B,left,1,img/l.png\n");
  CHECK_THROWS_WITH_AS(load_manifest(dir / "unpaired.csv"), doctest::Contains("s2l"), DatasetError);
  CHECK_THROWS_AS(load_manifest(dir / "absent.csv"), DatasetError);
}

TEST_CASE("preprocess endpoints") {
  for (int level : {0, 255, 128}) {
    const Tensor t = preprocess(Image(20, 20, static_cast<std::uint8_t>(level)), 16);
    CHECK(t.shape() == Shape{1, 3, 16, 16});
    const double expect = 2.0 * level / 255.0 - 1.0;
    for (float v : t.values()) CHECK(v == doctest::Approx(expect).epsilon(1e-6));
  }
  CHECK(2.0 * 128 / 255.0 - 1.0 == doctest::Approx(0.00392).epsilon(1e-3));
  CHECK_THROWS(preprocess(Image(), 16));
}

TEST_CASE("preprocess then postprocess stays within one gray level") {
  Image img(24, 24);
  std::mt19937_64 rng(3);
  for (auto& v : img.rgb) v = static_cast<std::uint8_t>(rng() & 0xff);
  const Image back = postprocess(preprocess(img, 24));
  REQUIRE(back.width == 24);
  for (std::size_t i = 0; i < img.rgb.size(); ++i) CHECK(std::abs(int(img.rgb[i]) - int(back.rgb[i])) <= 1);
}

TEST_CASE("gray ramp probes") {
  const ProbeSet g = make_probe_set(ProbeKind::gray_ramp, 64, 123);
  REQUIRE(g.size() == 9);
  const int levels[] = {0, 32, 64, 96, 128, 160, 192, 224, 255};
  for (int k = 0; k < 9; ++k) {
    CHECK(g.images[k].width == 64);
    CHECK(*g.labels[k].gray_level == levels[k]);
    std::set<int> hist(g.images[k].rgb.begin(), g.images[k].rgb.end());
    CHECK(hist == std::set<int>{levels[k]});
  }
  CHECK(g.images[3].rgb.front() == 96);
  CHECK(g.images[0].rgb.front() == 0);
  CHECK(make_probe_set(ProbeKind::gray_ramp, 64, 5).images == g.images);
}

TEST_CASE("noise probes") {
  const ProbeSet a = make_probe_set(ProbeKind::gaussian_noise, 64, 7);
  const ProbeSet b = make_probe_set(ProbeKind::gaussian_noise, 64, 7);
  REQUIRE(a.size() == 5);
  CHECK(a.images == b.images);
  CHECK(make_probe_set(ProbeKind::gaussian_noise, 64, 8).images != a.images);
  double s = 0.0, q = 0.0, n = 0.0;
  for (const auto& img : a.images)
    for (auto v : img.rgb) {
      s += v;
      q += double(v) * v;
      n += 1;
    }
  CHECK(s / n == doctest::Approx(127.5).epsilon(0.01));
  CHECK(std::sqrt(q / n - (s / n) * (s / n)) == doctest::Approx(42.5).epsilon(0.03));
  CHECK_THROWS(make_probe_set(ProbeKind::in_distribution, 64, 1));
}

TEST_CASE("synthetic corpus counts and determinism") {
  TempDir a("bp-syn"), b("bp-syn");
  const auto ca = make_synthetic_corpus(10, 64, 1, 0.5, a.path());
  make_synthetic_corpus(10, 64, 1, 0.5, b.path());
  int pngs = 0;
  for (const auto& e : std::filesystem::directory_iterator(ca.image_dir)) {
    ++pngs;
    CHECK(slurp(e.path()) == slurp(b.path() / "images" / e.path().filename()));
  }
  CHECK(pngs == 30);
  CHECK(slurp(ca.manifest_path) == slurp(b / "manifest.csv"));
  const FacePairManifest m = load_manifest(ca.manifest_path);
  CHECK(m.pairs().size() == 20);
  std::map<Attribute, std::set<std::string>> subjects;
  for (const auto& r : m.records()) subjects[r.attribute].insert(r.subject_id);
  CHECK(subjects[Attribute::A].size() == 5);
  CHECK(subjects[Attribute::B].size() == 5);
}

TEST_CASE("200-subject corpus yields 400 pairs") {
  TempDir dir("bp-syn200");
  const auto c = make_synthetic_corpus(200, 16, 4, 0.5, dir.path());
  CHECK(load_manifest(c.manifest_path).pairs().size() == 400);
}

TEST_CASE("synthetic corpus errors") {
  TempDir dir("bp-synerr");
  write_text(dir / "file", "x");
  CHECK_THROWS_AS(make_synthetic_corpus(4, 16, 1, 0.5, dir / "file" / "sub"), DatasetError);
}

TEST_CASE("stub classifier reads the frontal renders") {
  TempDir dir("bp-stub");
  const auto c = make_synthetic_corpus(100, 32, 2, 0.6, dir.path());
  const FacePairManifest m = load_manifest(c.manifest_path);
  evaluation::StubClassifier stub;
  int right = 0, total = 0;
  for (const auto& r : m.records()) {
    if (r.pose != Pose::front) continue;
    const auto res = stub.analyze(read_png(r.image_path));
    ++total;
    right += res.face_detected && res.attribute == r.attribute;
  }
  CHECK(total == 100);
  MESSAGE("stub accuracy on frontals: " << right << "/" << total);
  CHECK(static_cast<double>(right) / total >= 0.95);
}

TEST_CASE("rgb stats") {
  SUBCASE("constant images") {
    CHECK(image_mean(Image(8, 8, 128), StatsRegion::whole) == 128.0);
    CHECK(image_mean(Image(8, 8, 128), StatsRegion::face_box) == 128.0);
    TempDir dir("bp-rgb");
    write_png(dir / "f.png", Image(8, 8, 0));
    write_png(dir / "l.png", Image(8, 8, 255));
    const FacePairManifest m({{"f", "s", Attribute::A, Pose::front, "1", dir / "f.png"},
                              {"l", "s", Attribute::A, Pose::left, "1", dir / "l.png"}},
                             8);
    const TrainSplit s = build_split(m, spec(10, 0, 5), {});
    const auto stats = image_rgb_stats(m, s, StatsRegion::whole);
    CHECK(*stats.at(Attribute::A) == 127.5);
    CHECK_FALSE(stats.at(Attribute::B).has_value());
  }
  SUBCASE("synthetic corpus against pixel sums") {
    TempDir dir("bp-rgb-syn");
    const auto c = make_synthetic_corpus(30, 32, 1, 0.5, dir.path());
    const FacePairManifest m = load_manifest(c.manifest_path);
    const TrainSplit s = build_split(m, spec(5, 5, 100, 3), {});
    for (StatsRegion region : {StatsRegion::whole, StatsRegion::face_box}) {
      const auto stats = image_rgb_stats(m, s, region);
      std::map<Attribute, double> sum, count;
      std::set<std::string> seen;
      for (const auto& id : s.pair_ids) {
        const FacePair& p = m.pair(id);
        for (const auto& rid : {p.side_id, p.front_id}) {
          if (!seen.insert(rid).second) continue;
          const FaceRecord& r = m.record(rid);
          const Image img = read_png(r.image_path);
          const int lo = region == StatsRegion::whole ? 0 : 8, hi = region == StatsRegion::whole ? 32 : 24;
          for (int y = lo; y < hi; ++y)
            for (int x = lo; x < hi; ++x)
              for (int ch = 0; ch < 3; ++ch) {
                sum[r.attribute] += img.at(x, y, ch);
                count[r.attribute] += 1;
              }
        }
      }
      for (Attribute a : {Attribute::A, Attribute::B})
        CHECK(std::abs(*stats.at(a) - sum[a] / count[a]) < 1e-6);
    }
  }
}

TEST_CASE("png round trip is canonical") {
  Image img(5, 3);
  for (std::size_t i = 0; i < img.rgb.size(); ++i) img.rgb[i] = static_cast<std::uint8_t>(i * 17);
  const auto bytes = encode_png(img);
  CHECK(decode_png(bytes) == img);
  CHECK(encode_png(decode_png(bytes)) == bytes);
}
