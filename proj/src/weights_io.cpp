#include "histosr/weights_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <vector>

#include <json.hpp>

namespace histosr {

namespace {

constexpr char kMagic[4] = {'P', 'S', 'R', 'W'};
constexpr std::uint32_t kVersion = 1;

void put_u32_le(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xff));
}

std::uint32_t get_u32_le(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put_f32_le(std::vector<std::uint8_t>& out, float f) {
    put_u32_le(out, std::bit_cast<std::uint32_t>(f));
}

float get_f32_le(const std::uint8_t* p) { return std::bit_cast<float>(get_u32_le(p)); }

nlohmann::json config_to_json(const UNetConfig& c) {
    return {{"levels", c.levels},
            {"base_channels", c.base_channels},
            {"input_h", c.input_h},
            {"input_w", c.input_w},
            {"upsample", c.upsample_mode},
            {"skip", c.skip_mode}};
}

UNetConfig config_from_json(const nlohmann::json& j) {
    UNetConfig c;
    c.levels = j.at("levels").get<int>();
    c.base_channels = j.at("base_channels").get<int>();
    c.input_h = j.at("input_h").get<int>();
    c.input_w = j.at("input_w").get<int>();
    c.upsample_mode = j.at("upsample").get<std::string>();
    c.skip_mode = j.at("skip").get<std::string>();
    return c;
}

// Per-tensor manifest in traversal order: <layer>.w then <layer>.b.
struct TensorEntry {
    std::string name;
    std::vector<int> shape;
    std::size_t count;
};

std::vector<TensorEntry> expected_entries(const UNetConfig& cfg) {
    std::vector<TensorEntry> out;
    for (const auto& s : detail::unet_layer_shapes(cfg)) {
        out.push_back({s.name + ".w",
                       {s.kh, s.kw, s.c_in, s.c_out},
                       static_cast<std::size_t>(s.kh) * s.kw * s.c_in * s.c_out});
        out.push_back({s.name + ".b", {s.c_out}, static_cast<std::size_t>(s.c_out)});
    }
    return out;
}

std::string shape_to_str(const std::vector<int>& s) {
    std::string r;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) r += "x";
        r += std::to_string(s[i]);
    }
    return r;
}

}  // namespace

void save_weights(const ModelWeights& w, const std::string& path) {
    w.config.validate();
    nlohmann::json header;
    header["config"] = config_to_json(w.config);
    header["layers"] = nlohmann::json::array();
    for (const auto& e : expected_entries(w.config)) {
        header["layers"].push_back({{"name", e.name}, {"shape", e.shape}});
    }
    const std::string header_str = header.dump();

    std::vector<std::uint8_t> bytes;
    bytes.reserve(12 + header_str.size() + w.parameter_count() * 4);
    bytes.insert(bytes.end(), kMagic, kMagic + 4);
    put_u32_le(bytes, kVersion);
    put_u32_le(bytes, static_cast<std::uint32_t>(header_str.size()));
    bytes.insert(bytes.end(), header_str.begin(), header_str.end());
    w.for_each_layer([&](const std::string&, const ConvKernel& k) {
        for (float v : k.weights) put_f32_le(bytes, v);
        for (float v : k.bias) put_f32_le(bytes, v);
    });

    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open '" + path + "' for writing");
    os.write(reinterpret_cast<const char*>(bytes.data()),
             static_cast<std::streamsize>(bytes.size()));
    if (!os) throw IoError("failed writing weights to '" + path + "'");
}

ModelWeights load_weights(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open weights file '" + path + "'");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)),
                                    std::istreambuf_iterator<char>());
    is.close();

    if (bytes.size() < 12) throw FormatError("'" + path + "': truncated before header", bytes.size());
    if (std::memcmp(bytes.data(), kMagic, 4) != 0) {
        throw FormatError("'" + path + "': bad magic, not a weights file", 0);
    }
    const std::uint32_t version = get_u32_le(&bytes[4]);
    if (version != kVersion) {
        throw FormatError("'" + path + "': unsupported version " + std::to_string(version), 4);
    }
    const std::uint32_t header_len = get_u32_le(&bytes[8]);
    if (static_cast<std::size_t>(header_len) > bytes.size() - 12) {
        throw FormatError("'" + path + "': header length " + std::to_string(header_len) +
                              " exceeds file size",
                          8);
    }

    nlohmann::json header;
    UNetConfig cfg;
    try {
        header = nlohmann::json::parse(bytes.begin() + 12, bytes.begin() + 12 + header_len);
        cfg = config_from_json(header.at("config"));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("'" + path + "': bad header: " + e.what(), 12);
    }
    try {
        cfg.validate();
    } catch (const ConfigError& e) {
        throw FormatError("'" + path + "': invalid config: " + e.what(), 12);
    }

    const auto expected = expected_entries(cfg);
    const auto& layers = header.at("layers");
    if (!layers.is_array() || layers.size() != expected.size()) {
        throw FormatError("'" + path + "': layer manifest has " + std::to_string(layers.size()) +
                              " entries, expected " + std::to_string(expected.size()),
                          12);
    }

    std::size_t offset = 12 + header_len;
    std::size_t total_floats = 0;
    for (std::size_t i = 0; i < expected.size(); ++i) {
        std::string name;
        std::vector<int> shape;
        try {
            name = layers[i].at("name").get<std::string>();
            shape = layers[i].at("shape").get<std::vector<int>>();
        } catch (const nlohmann::json::exception& e) {
            throw FormatError("'" + path + "': bad manifest entry " + std::to_string(i) + ": " +
                                  e.what(),
                              12);
        }
        if (name != expected[i].name || shape != expected[i].shape) {
            throw FormatError("'" + path + "': layer " + name + " has shape " +
                                  shape_to_str(shape) + ", expected " + expected[i].name +
                                  " with shape " + shape_to_str(expected[i].shape),
                              offset + total_floats * 4);
        }
        total_floats += expected[i].count;
    }

    const std::size_t data_bytes = bytes.size() - offset;
    if (data_bytes != total_floats * 4) {
        throw FormatError("'" + path + "': expected " + std::to_string(total_floats * 4) +
                              " data bytes, found " + std::to_string(data_bytes),
                          bytes.size());
    }

    ModelWeights w = alloc_unet<float>(cfg);
    const std::uint8_t* p = bytes.data() + offset;
    w.for_each_layer([&](const std::string&, ConvKernel& k) {
        for (float& v : k.weights) {
            v = get_f32_le(p);
            p += 4;
        }
        for (float& v : k.bias) {
            v = get_f32_le(p);
            p += 4;
        }
    });
    return w;
}

}  // namespace histosr
