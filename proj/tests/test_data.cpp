#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "oracles.hpp"
#include "rotex/data.hpp"
#include "rotex/errors.hpp"
#include "rotex/rotate.hpp"

using namespace rotex;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write_bytes(const fs::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST_CASE("pgm decoding scales 8-bit values") {
    fs::path dir = fresh_dir("rotex_pgm_test");
    std::string payload = "P5\n2 2\n255\n";
    payload.push_back(static_cast<char>(0));
    payload.push_back(static_cast<char>(255));
    payload.push_back(static_cast<char>(128));
    payload.push_back(static_cast<char>(64));
    write_bytes(dir / "a.pgm", payload);

    Tensor img = load_pgm((dir / "a.pgm").string());
    REQUIRE(img.rows() == 2);
    REQUIRE(img.cols() == 2);
    CHECK(img(0, 0) == doctest::Approx(0.0));
    CHECK(img(0, 1) == doctest::Approx(1.0));
    CHECK(img(1, 0) == doctest::Approx(128.0 / 255.0));
    CHECK(img(1, 1) == doctest::Approx(64.0 / 255.0));
}

TEST_CASE("pgm header comments are tolerated") {
    fs::path dir = fresh_dir("rotex_pgm_comment");
    std::string payload = "P5\n# a comment line\n2 1\n# another\n255\n";
    payload.push_back(static_cast<char>(10));
    payload.push_back(static_cast<char>(20));
    write_bytes(dir / "c.pgm", payload);
    Tensor img = load_pgm((dir / "c.pgm").string());
    CHECK(img(0, 1) == doctest::Approx(20.0 / 255.0));
}

TEST_CASE("pgm decode errors") {
    fs::path dir = fresh_dir("rotex_pgm_bad");
    write_bytes(dir / "magic.pgm", "P6\n1 1\n255\nx");
    CHECK_THROWS_AS(load_pgm((dir / "magic.pgm").string()), IngestError);

    write_bytes(dir / "trunc.pgm", "P5\n4 4\n255\nab");
    CHECK_THROWS_AS(load_pgm((dir / "trunc.pgm").string()), IngestError);

    write_bytes(dir / "maxval.pgm", "P5\n1 1\n65535\nab");
    CHECK_THROWS_AS(load_pgm((dir / "maxval.pgm").string()), IngestError);

    CHECK_THROWS_AS(load_pgm((dir / "missing.pgm").string()), IngestError);
}

TEST_CASE("pgm write-read round trip is exact for quantized values") {
    std::mt19937_64 rng(131);
    fs::path dir = fresh_dir("rotex_pgm_roundtrip");
    Tensor img({7, 9});
    std::uniform_int_distribution<int> dist(0, 255);
    for (std::size_t i = 0; i < img.size(); ++i) img(i) = dist(rng) / 255.0;
    save_pgm(img, (dir / "r.pgm").string());
    Tensor back = load_pgm((dir / "r.pgm").string());
    CHECK(max_abs_diff(img, back) == 0.0);
}

TEST_CASE("manifest round trip preserves order and pixels") {
    std::mt19937_64 rng(132);
    fs::path dir = fresh_dir("rotex_manifest_ok");
    fs::create_directories(dir / "images");
    std::vector<Tensor> images;
    std::string manifest = "3\n";
    for (int i = 0; i < 3; ++i) {
        Tensor img({6, 6});
        std::uniform_int_distribution<int> dist(0, 255);
        for (std::size_t j = 0; j < img.size(); ++j) img(j) = dist(rng) / 255.0;
        std::string name = "img" + std::to_string(i) + ".pgm";
        save_pgm(img, (dir / "images" / name).string());
        images.push_back(img);
        manifest += name + " " + std::to_string(i % 2) + "\n";
    }
    write_bytes(dir / "train.txt", manifest);
    write_bytes(dir / "test.txt", manifest);

    Problem p = load_problem(dir.string());
    REQUIRE(p.train.size() == 3);
    CHECK(p.train.class_count == 2);
    for (int i = 0; i < 3; ++i) {
        CHECK(p.train.names[i] == "img" + std::to_string(i) + ".pgm");
        CHECK(p.train.labels[i] == static_cast<std::size_t>(i % 2));
        CHECK(max_abs_diff(p.train.images[i], images[i]) == 0.0);
    }
}

TEST_CASE("manifest validation errors are specific") {
    fs::path dir = fresh_dir("rotex_manifest_bad");
    fs::create_directories(dir / "images");
    Tensor img({4, 4}, 0.5);
    save_pgm(img, (dir / "images" / "a.pgm").string());
    save_pgm(img, (dir / "images" / "b.pgm").string());
    save_pgm(img, (dir / "images" / "c.pgm").string());

    // declared 2 but lists 3
    write_bytes(dir / "m1.txt", "2\na.pgm 0\nb.pgm 1\nc.pgm 0\n");
    CHECK_THROWS_WITH_AS(load_manifest((dir / "m1.txt").string(), (dir / "images").string()),
                         doctest::Contains("declares 2"), IngestError);

    // malformed line
    write_bytes(dir / "m2.txt", "2\na.pgm 0\nb.pgm\n");
    CHECK_THROWS_WITH_AS(load_manifest((dir / "m2.txt").string(), (dir / "images").string()),
                         doctest::Contains("m2.txt:3"), IngestError);

    // labels not dense: class 1 missing
    write_bytes(dir / "m3.txt", "2\na.pgm 0\nb.pgm 2\n");
    CHECK_THROWS_WITH_AS(load_manifest((dir / "m3.txt").string(), (dir / "images").string()),
                         doctest::Contains("class 1"), IngestError);

    // referenced image does not exist
    write_bytes(dir / "m4.txt", "1\nmissing.pgm 0\n");
    CHECK_THROWS_AS(load_manifest((dir / "m4.txt").string(), (dir / "images").string()),
                    IngestError);

    // CRLF manifests parse fine
    write_bytes(dir / "m5.txt", "2\r\na.pgm 0\r\nb.pgm 1\r\n");
    DatasetSplit split = load_manifest((dir / "m5.txt").string(), (dir / "images").string());
    CHECK(split.size() == 2);
}

TEST_CASE("axis-aligned grating has constant rows and periodic columns") {
    SynthSpec spec;
    spec.components = {{0.25, 1.0, 0.0}};
    spec.orientation = 0.0;
    spec.size = 32;
    spec.noise_std = 0.0;
    Tensor img = synth_texture(spec);
    // orientation 0: the wave varies along rows, so each row is constant
    for (std::size_t r = 0; r < 32; ++r) {
        for (std::size_t c = 1; c < 32; ++c) CHECK(img(r, c) == doctest::Approx(img(r, 0)));
    }
    // period 1/f = 4 pixels down the columns
    for (std::size_t r = 0; r < 28; ++r) {
        CHECK(img(r, 0) == doctest::Approx(img(r + 4, 0)).epsilon(1e-9));
    }
}

TEST_CASE("orientation theta and theta+pi yield the same image") {
    SynthSpec spec;
    spec.components = {{0.2, 0.8, 0.0}, {0.1, 0.4, 1.1}};
    spec.size = 33;
    spec.noise_std = 0.0;
    spec.orientation = 0.7;
    Tensor a = synth_texture(spec);
    spec.orientation = 0.7 + M_PI;
    Tensor b = synth_texture(spec);
    CHECK(max_abs_diff(a, b) <= 1e-9);
}

TEST_CASE("synthesis is deterministic and validates frequencies") {
    SynthSpec spec;
    spec.components = {{0.3, 1.0, 0.0}};
    spec.size = 16;
    spec.noise_std = 0.1;
    spec.seed = 77;
    Tensor a = synth_texture(spec);
    Tensor b = synth_texture(spec);
    CHECK(max_abs_diff(a, b) == 0.0);

    spec.components = {{0.6, 1.0, 0.0}};  // above Nyquist
    CHECK_THROWS_AS(synth_texture(spec), ConfigError);
}

TEST_CASE("analytic equivariance: rotating the texture equals rotating its orientation") {
    SynthSpec spec;
    spec.components = {{0.15, 0.9, 0.0}};
    spec.size = 41;
    spec.noise_std = 0.0;
    spec.orientation = 0.0;
    Tensor base = synth_texture(spec);

    // exact at grid-representable rotations: a quarter turn
    spec.orientation = M_PI / 2.0;
    Tensor quarter = synth_texture(spec);
    CHECK(max_abs_diff(quarter, rot90(base, 1)) <= 1e-9);

    double angle = 0.37;
    spec.orientation = angle;
    Tensor oriented = synth_texture(spec);
    Tensor resampled = rotate_image(base, angle);

    // compare away from the border where the resampler clips its support;
    // bicubic resampling of the smooth wave is accurate to a few permille
    double center = 20.0;
    double worst = 0.0;
    for (std::size_t r = 3; r < 38; ++r) {
        for (std::size_t c = 3; c < 38; ++c) {
            double dr = r - center, dc = c - center;
            if (std::sqrt(dr * dr + dc * dc) > 14.0) continue;
            worst = std::max(worst, std::abs(oriented(r, c) - resampled(r, c)));
        }
    }
    CHECK(worst <= 0.02);
}

TEST_CASE("synthetic split generation is stratified and deterministic") {
    SynthSet set = default_synth_set();
    REQUIRE(set.classes.size() == 6);
    DatasetSplit a = make_synth_split(set, 3, 0.0, 9);
    DatasetSplit b = make_synth_split(set, 3, 0.0, 9);
    REQUIRE(a.size() == 18);
    CHECK(a.class_count == 6);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a.labels[i] == i / 3);
        CHECK(max_abs_diff(a.images[i], b.images[i]) == 0.0);
    }
    for (const Tensor& img : a.images) {
        for (std::size_t i = 0; i < img.size(); ++i) {
            CHECK(img(i) >= 0.0);
            CHECK(img(i) <= 1.0);
        }
    }
}

TEST_CASE("synth set JSON loading") {
    fs::path dir = fresh_dir("rotex_synth_json");
    write_bytes(dir / "set.json", R"({
      "size": 48, "noise_std": 0.01,
      "classes": [
        {"components": [{"frequency": 0.25, "weight": 1.0}]},
        {"components": [{"frequency": 0.125, "weight": 0.6, "phase": 0.0},
                        {"frequency": 0.125, "weight": 0.6, "phase": 1.5707963}]}
      ]})");
    SynthSet set = load_synth_set((dir / "set.json").string());
    CHECK(set.size == 48);
    CHECK(set.classes.size() == 2);
    CHECK(set.classes[1].size() == 2);

    write_bytes(dir / "bad.json", "{not json");
    CHECK_THROWS_AS(load_synth_set((dir / "bad.json").string()), IngestError);
    write_bytes(dir / "one.json", R"({"classes": [{"components": [{"frequency": 0.2}]}]})");
    CHECK_THROWS_AS(load_synth_set((dir / "one.json").string()), IngestError);
}

TEST_CASE("dataset hash tracks content") {
    SynthSet set = default_synth_set();
    DatasetSplit a = make_synth_split(set, 2, 0.0, 1);
    DatasetSplit b = make_synth_split(set, 2, 0.0, 1);
    DatasetSplit c = make_synth_split(set, 2, 0.0, 2);
    CHECK(dataset_hash(a) == dataset_hash(b));
    CHECK(dataset_hash(a) != dataset_hash(c));
}
