// End-to-end checks of the command-line tool, driven through a subprocess.
// The binary path arrives in HISTOSR_BIN (set by ctest).

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

#include "histosr/dataset.hpp"
#include "histosr/line_profile.hpp"
#include "histosr/residual.hpp"
#include "histosr/weights_io.hpp"

using namespace histosr;
namespace fs = std::filesystem;

namespace {

std::string binary() {
    const char* p = std::getenv("HISTOSR_BIN");
    REQUIRE_MESSAGE(p != nullptr, "HISTOSR_BIN must point at the CLI binary");
    return p;
}

int run(const std::string& args) {
    const std::string cmd = binary() + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    return WIFEXITED(status) ? WEXITSTATUS(status) : -2;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    REQUIRE(is.good());
    return std::string((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
}

fs::path fresh_dir(const char* name) {
    const fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("synth writes the requested count and replays byte-identically") {
    const auto dir = fresh_dir("histosr_cli_synth");
    const std::string out_a = (dir / "a").string();
    const std::string out_b = (dir / "b").string();
    CHECK(run("synth --count 2 --width 80 --height 64 --seed 7 --out-dir " + out_a) == 0);
    CHECK(run("synth --count 2 --width 80 --height 64 --seed 7 --out-dir " + out_b) == 0);
    CHECK(fs::exists(fs::path(out_a) / "synth_0000.png"));
    CHECK(fs::exists(fs::path(out_a) / "synth_0001.png"));
    CHECK(slurp(fs::path(out_a) / "synth_0000.png") == slurp(fs::path(out_b) / "synth_0000.png"));
    CHECK(slurp(fs::path(out_a) / "synth_0001.png") == slurp(fs::path(out_b) / "synth_0001.png"));

    // Different seed, different bytes.
    const std::string out_c = (dir / "c").string();
    CHECK(run("synth --count 1 --width 80 --height 64 --seed 8 --out-dir " + out_c) == 0);
    CHECK(slurp(fs::path(out_a) / "synth_0000.png") != slurp(fs::path(out_c) / "synth_0000.png"));
    fs::remove_all(dir);
}

TEST_CASE("unknown flags are hard errors with the config exit code") {
    CHECK(run("synth --count 1 --no-such-flag 1 --out-dir /tmp/x") == 2);
    CHECK(run("definitely-not-a-subcommand") == 2);
}

TEST_CASE("build-dataset audits itself and matches the manifest schema") {
    const auto dir = fresh_dir("histosr_cli_bd");
    const std::string src = (dir / "src").string();
    const std::string out = (dir / "data").string();
    CHECK(run("synth --count 2 --width 96 --height 96 --seed 3 --out-dir " + src) == 0);
    CHECK(run("build-dataset --src-dir " + src + " --count 6 --patch 32 --factor 2 --train 4 "
              "--test 2 --seed 11 --out-dir " + out) == 0);

    const auto m = load_manifest((fs::path(out) / "manifest.json").string());
    CHECK(m.degrade_factor == 2);
    CHECK(m.patch == 32);
    CHECK(m.samples.size() == 6);
    CHECK(m.split_indices("train").size() == 4);
    CHECK(m.split_indices("test").size() == 2);
    for (std::size_t i = 0; i < m.samples.size(); ++i) {
        const auto s = load_sample(m, i);
        CHECK(s.residual == encode_residual(s.hr, s.lr));
        CHECK(s.lr.width == 32);
        CHECK(s.lr.height == 32);
    }

    // count < train + test is a configuration error.
    CHECK(run("build-dataset --src-dir " + src + " --count 3 --patch 32 --train 4 --test 2 "
              "--out-dir " + (dir / "bad").string()) == 2);
    fs::remove_all(dir);
}

TEST_CASE("build-dataset and train replay byte-identically for a fixed seed") {
    const auto dir = fresh_dir("histosr_cli_det");
    const std::string src = (dir / "src").string();
    CHECK(run("synth --count 2 --width 72 --height 72 --seed 5 --out-dir " + src) == 0);

    auto build_and_train = [&](const std::string& tag) {
        const std::string data = (dir / ("data_" + tag)).string();
        CHECK(run("build-dataset --src-dir " + src +
                  " --count 4 --patch 16 --factor 2 --train 3 --test 1 --seed 21 --out-dir " +
                  data) == 0);
        const std::string weights = (dir / ("model_" + tag + ".psrw")).string();
        const std::string metrics = (dir / ("metrics_" + tag + ".csv")).string();
        CHECK(run("train --manifest " + data + "/manifest.json --levels 1 --base-channels 2 "
                  "--lr 0.001 --batch 2 --epochs 2 --patience 2 --seed 13 --eval-every 1 "
                  "--checkpoint-every 0 --out " + weights + " --metrics " + metrics) == 0);
        return std::pair{weights, metrics};
    };

    const auto [w1, m1] = build_and_train("a");
    const auto [w2, m2] = build_and_train("b");
    CHECK(slurp(w1) == slurp(w2));
    CHECK(slurp(m1) == slurp(m2));
    CHECK(slurp(dir / "data_a" / "manifest.json") == slurp(dir / "data_b" / "manifest.json"));
    CHECK(slurp(dir / "data_a" / "lr" / "sample_0000.png") ==
          slurp(dir / "data_b" / "lr" / "sample_0000.png"));
    CHECK(slurp(dir / "data_a" / "residual" / "sample_0002.png") ==
          slurp(dir / "data_b" / "residual" / "sample_0002.png"));
    fs::remove_all(dir);
}

TEST_CASE("predict emits a residual and its exact decode") {
    const auto dir = fresh_dir("histosr_cli_predict");
    const std::string src = (dir / "src").string();
    CHECK(run("synth --count 1 --width 64 --height 64 --seed 2 --out-dir " + src) == 0);

    // An untrained (but saved) model is fine for the contract.
    UNetConfig cfg;
    cfg.levels = 2;
    cfg.base_channels = 4;
    cfg.input_h = cfg.input_w = 64;
    save_weights(build_unet<float>(cfg, 77), (dir / "w.psrw").string());

    const std::string input = src + "/synth_0000.png";
    const std::string res = (dir / "res.png").string();
    const std::string rec = (dir / "rec.png").string();
    CHECK(run("predict --weights " + (dir / "w.psrw").string() + " --input " + input +
              " --out-residual " + res + " --out-reconstructed " + rec) == 0);

    const auto lr = read_png(input);
    const auto residual = read_png(res);
    const auto recon = read_png(rec);
    CHECK(recon == decode_residual(lr, residual));

    // Wrong divisibility -> config exit code.
    const std::string odd = (dir / "odd.png").string();
    write_png(ImageRGB8(30, 64, 100), odd);
    CHECK(run("predict --weights " + (dir / "w.psrw").string() + " --input " + odd +
              " --out-residual " + res + " --out-reconstructed " + rec) == 2);

    // Corrupt weights -> data exit code.
    std::ofstream bad((dir / "bad.psrw").string(), std::ios::binary);
    bad << "XXXXGARBAGE";
    bad.close();
    CHECK(run("predict --weights " + (dir / "bad.psrw").string() + " --input " + input +
              " --out-residual " + res + " --out-reconstructed " + rec) == 3);
    fs::remove_all(dir);
}

TEST_CASE("evaluate prints the rMSE report and honors missing splits") {
    const auto dir = fresh_dir("histosr_cli_eval");
    const std::string src = (dir / "src").string();
    const std::string data = (dir / "data").string();
    CHECK(run("synth --count 1 --width 64 --height 64 --seed 4 --out-dir " + src) == 0);
    CHECK(run("build-dataset --src-dir " + src + " --count 2 --patch 16 --train 1 --test 1 "
              "--seed 6 --out-dir " + data) == 0);

    UNetConfig cfg;
    cfg.levels = 1;
    cfg.base_channels = 2;
    cfg.input_h = cfg.input_w = 16;
    save_weights(build_unet<float>(cfg, 8), (dir / "w.psrw").string());

    const std::string csv = (dir / "eval.csv").string();
    const std::string cmd = binary() + " evaluate --weights " + (dir / "w.psrw").string() +
                            " --manifest " + data + "/manifest.json --split test --out-csv " +
                            csv + " > " + (dir / "out.txt").string() + " 2>&1";
    REQUIRE(std::system(cmd.c_str()) == 0);
    const std::string printed = slurp(dir / "out.txt");
    CHECK(printed.find("rmse_reconstruction:") != std::string::npos);
    CHECK(printed.find("rmse_residual:") != std::string::npos);
    CHECK(printed.find("baseline") != std::string::npos);
    CHECK(printed.find("paper-reported") != std::string::npos);
    CHECK(slurp(csv).find("split,images,") == 0);

    CHECK(run("evaluate --weights " + (dir / "w.psrw").string() + " --manifest " + data +
              "/manifest.json --split validation") == 2);
    fs::remove_all(dir);
}

TEST_CASE("profile matches an independent line walk") {
    const auto dir = fresh_dir("histosr_cli_profile");
    ImageRGB8 a(32, 24);
    ImageRGB8 b(32, 24);
    Rng rng(77);
    for (auto& p : a.pixels) p = static_cast<std::uint8_t>(rng.uniform_below(256));
    for (auto& p : b.pixels) p = static_cast<std::uint8_t>(rng.uniform_below(256));
    write_png(a, (dir / "a.png").string());
    write_png(b, (dir / "b.png").string());

    const std::string csv = (dir / "prof.csv").string();
    CHECK(run("profile --image-a " + (dir / "a.png").string() + " --image-b " +
              (dir / "b.png").string() + " --x0 2 --y0 3 --x1 29 --y1 17 --out-csv " + csv) == 0);

    // Oracle: an independent integer DDA-style walk over the same segment.
    const auto expected = bresenham_line(2, 3, 29, 17);
    std::ifstream is(csv);
    std::string header;
    std::getline(is, header);
    CHECK(header == "index,x,y,red_a,red_b");
    std::size_t rows = 0;
    std::string line;
    while (std::getline(is, line)) {
        int idx, x, y, ra, rb;
        REQUIRE(std::sscanf(line.c_str(), "%d,%d,%d,%d,%d", &idx, &x, &y, &ra, &rb) == 5);
        REQUIRE(rows < expected.size());
        CHECK(idx == static_cast<int>(rows));
        CHECK(x == expected[rows].first);
        CHECK(y == expected[rows].second);
        CHECK(ra == static_cast<int>(a.at(x, y, 0)));
        CHECK(rb == static_cast<int>(b.at(x, y, 0)));
        ++rows;
    }
    CHECK(rows == expected.size());

    // Degenerate A == B segment: a single row.
    const std::string csv1 = (dir / "prof1.csv").string();
    CHECK(run("profile --image-a " + (dir / "a.png").string() + " --image-b " +
              (dir / "b.png").string() + " --x0 5 --y0 5 --x1 5 --y1 5 --out-csv " + csv1) == 0);
    const auto single = slurp(csv1);
    CHECK(std::count(single.begin(), single.end(), '\n') == 2);

    // Out-of-bounds endpoint -> config error.
    CHECK(run("profile --image-a " + (dir / "a.png").string() + " --image-b " +
              (dir / "b.png").string() + " --x0 0 --y0 0 --x1 32 --y1 5 --out-csv " + csv1) == 2);
    fs::remove_all(dir);
}

TEST_CASE("degrade subcommand round-trips through files") {
    const auto dir = fresh_dir("histosr_cli_degrade");
    const std::string src = (dir / "src").string();
    CHECK(run("synth --count 1 --width 64 --height 48 --seed 12 --out-dir " + src) == 0);
    const std::string out = (dir / "blurred.png").string();
    CHECK(run("degrade --input " + src + "/synth_0000.png --out " + out + " --factor 2") == 0);
    const auto img = read_png(out);
    CHECK(img.width == 64);
    CHECK(img.height == 48);
    // Indivisible factor -> config error.
    CHECK(run("degrade --input " + src + "/synth_0000.png --out " + out + " --factor 5") == 2);
    fs::remove_all(dir);
}
