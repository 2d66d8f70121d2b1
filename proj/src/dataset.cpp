#include "histosr/dataset.hpp"

#include <fstream>
#include <numeric>

#include <json.hpp>

#include "histosr/residual.hpp"

namespace histosr {

std::vector<ImageRGB8> augment_patches(const std::vector<ImageRGB8>& sources, int count, int patch,
                                       std::uint64_t seed) {
    if (sources.empty()) throw ConfigError("augment: no source images");
    if (count < 0) throw ConfigError("augment: count must be >= 0");
    if (patch < 1) throw ConfigError("augment: patch size must be >= 1");
    for (std::size_t i = 0; i < sources.size(); ++i) {
        if (sources[i].width < patch || sources[i].height < patch) {
            throw ConfigError("augment: source image " + std::to_string(i) + " is " +
                              sources[i].size_str() + ", smaller than patch " +
                              std::to_string(patch));
        }
    }

    std::vector<ImageRGB8> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        Rng rng = Rng::for_stream(seed, static_cast<std::uint64_t>(i));
        const ImageRGB8& src =
            sources[static_cast<std::size_t>(rng.uniform_below(sources.size()))];
        const int x0 = static_cast<int>(rng.uniform_below(
            static_cast<std::uint64_t>(src.width - patch) + 1));
        const int y0 = static_cast<int>(rng.uniform_below(
            static_cast<std::uint64_t>(src.height - patch) + 1));
        const bool hflip = rng.coin_flip();
        const bool vflip = rng.coin_flip();

        ImageRGB8 p(patch, patch);
        for (int y = 0; y < patch; ++y) {
            const int sy = y0 + (vflip ? patch - 1 - y : y);
            for (int x = 0; x < patch; ++x) {
                const int sx = x0 + (hflip ? patch - 1 - x : x);
                for (int ch = 0; ch < 3; ++ch) p.at(x, y, ch) = src.at(sx, sy, ch);
            }
        }
        out.push_back(std::move(p));
    }
    return out;
}

std::vector<std::string> split_assignments(std::size_t sample_count, int n_train, int n_test,
                                           Rng& rng) {
    if (n_train < 0 || n_test < 0 ||
        static_cast<std::size_t>(n_train) + static_cast<std::size_t>(n_test) > sample_count) {
        throw ConfigError("split: requested " + std::to_string(n_train) + " train + " +
                          std::to_string(n_test) + " test from only " +
                          std::to_string(sample_count) + " samples");
    }
    std::vector<std::size_t> order(sample_count);
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = sample_count; i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.uniform_below(i));
        std::swap(order[i - 1], order[j]);
    }
    std::vector<std::string> split(sample_count, "");
    for (int i = 0; i < n_train; ++i) split[order[static_cast<std::size_t>(i)]] = "train";
    for (int i = 0; i < n_test; ++i) {
        split[order[static_cast<std::size_t>(n_train + i)]] = "test";
    }
    return split;
}

void save_manifest(const DatasetManifest& m, const std::string& path) {
    nlohmann::json j;
    j["degrade_factor"] = m.degrade_factor;
    j["patch"] = m.patch;
    j["seed"] = m.seed;
    j["samples"] = nlohmann::json::array();
    for (const auto& s : m.samples) {
        j["samples"].push_back(
            {{"lr", s.lr}, {"hr", s.hr}, {"residual", s.residual}, {"split", s.split}});
    }
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open '" + path + "' for writing");
    os << j.dump(2) << "\n";
    if (!os) throw IoError("failed writing manifest '" + path + "'");
}

DatasetManifest load_manifest(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open manifest '" + path + "'");
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("manifest '" + path + "': " + e.what(), 0);
    }
    DatasetManifest m;
    try {
        m.degrade_factor = j.at("degrade_factor").get<int>();
        m.patch = j.at("patch").get<int>();
        m.seed = j.at("seed").get<std::uint64_t>();
        for (const auto& s : j.at("samples")) {
            ManifestEntry e;
            e.lr = s.at("lr").get<std::string>();
            e.hr = s.at("hr").get<std::string>();
            e.residual = s.at("residual").get<std::string>();
            e.split = s.at("split").get<std::string>();
            if (e.split != "train" && e.split != "test") {
                throw FormatError("manifest '" + path + "': unknown split '" + e.split + "'", 0);
            }
            m.samples.push_back(std::move(e));
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("manifest '" + path + "': " + e.what(), 0);
    }
    m.base_dir = std::filesystem::path(path).parent_path();
    return m;
}

PairedSample load_sample(const DatasetManifest& m, std::size_t index) {
    if (index >= m.samples.size()) {
        throw ConfigError("load_sample: index " + std::to_string(index) + " out of range");
    }
    const auto& e = m.samples[index];
    PairedSample s;
    s.lr = read_png((m.base_dir / e.lr).string());
    s.hr = read_png((m.base_dir / e.hr).string());
    s.residual = read_png((m.base_dir / e.residual).string());
    if (!s.lr.same_size(s.hr) || !s.lr.same_size(s.residual)) {
        throw FormatError("sample " + std::to_string(index) + ": images disagree on size (lr " +
                              s.lr.size_str() + ", hr " + s.hr.size_str() + ", residual " +
                              s.residual.size_str() + ")",
                          0);
    }
    return s;
}

}  // namespace histosr
