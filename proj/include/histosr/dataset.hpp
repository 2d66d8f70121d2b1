#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "histosr/image.hpp"
#include "histosr/rng.hpp"

namespace histosr {

struct ManifestEntry {
    std::string lr, hr, residual;  // paths relative to the manifest file
    std::string split;             // "train" or "test"
};

struct DatasetManifest {
    int degrade_factor = 2;
    int patch = 512;
    std::uint64_t seed = 0;
    std::vector<ManifestEntry> samples;
    std::filesystem::path base_dir;  // directory of the manifest file; not serialized

    std::vector<std::size_t> split_indices(const std::string& split) const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < samples.size(); ++i) {
            if (samples[i].split == split) out.push_back(i);
        }
        return out;
    }
};

// Random patches: per patch, draw source image, top-left corner, then 50%
// horizontal and 50% vertical flips. Patch i uses the child stream (seed, i).
std::vector<ImageRGB8> augment_patches(const std::vector<ImageRGB8>& sources, int count, int patch,
                                       std::uint64_t seed);

// Seeded Fisher-Yates shuffle of sample indices, then the first n_train go to
// "train" and the next n_test to "test"; anything beyond is left out.
std::vector<std::string> split_assignments(std::size_t sample_count, int n_train, int n_test,
                                           Rng& rng);

void save_manifest(const DatasetManifest& m, const std::string& path);
DatasetManifest load_manifest(const std::string& path);

struct PairedSample {
    ImageRGB8 lr, hr, residual;
};

PairedSample load_sample(const DatasetManifest& m, std::size_t index);

}  // namespace histosr
