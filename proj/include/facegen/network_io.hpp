#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "facegen/network.hpp"
#include "facegen/tensor.hpp"

namespace facegen {

// Weight file layout (little-endian):
//   magic "PGN1", layer count u32, then per layer:
//     kind u8 (0=conv, 1=relu, 2=maxpool)
//     name  u16 length + UTF-8 bytes
//     conv:    u32 in_ch, out_ch, kernel_h, kernel_w, stride, pad,
//              then f32 weights (out*in*kh*kw), then f32 bias (out)
//     relu:    no shape fields
//     maxpool: u32 kernel, stride
// The file must end exactly after the last layer.

namespace detail {

constexpr char kWeightMagic[4] = {'P', 'G', 'N', '1'};

class ByteReader {
public:
    ByteReader(const std::uint8_t* data, std::size_t size, std::string path)
        : data_(data), size_(size), path_(std::move(path)) {}

    std::uint8_t u8() { return take(1)[0]; }

    std::uint16_t u16() {
        const std::uint8_t* p = take(2);
        return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
    }

    std::uint32_t u32() {
        const std::uint8_t* p = take(4);
        return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
               (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
    }

    float f32() {
        std::uint32_t bits = u32();
        float out;
        std::memcpy(&out, &bits, 4);
        return out;
    }

    std::string str(std::size_t n) {
        const std::uint8_t* p = take(n);
        return std::string(reinterpret_cast<const char*>(p), n);
    }

    bool at_end() const { return pos_ == size_; }
    std::size_t remaining() const { return size_ - pos_; }

private:
    const std::uint8_t* take(std::size_t n) {
        if (pos_ + n > size_)
            throw std::runtime_error("weight file truncated (shape inconsistency): " + path_);
        const std::uint8_t* p = data_ + pos_;
        pos_ += n;
        return p;
    }

    const std::uint8_t* data_;
    std::size_t size_;
    std::size_t pos_ = 0;
    std::string path_;
};

inline void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 24));
}

inline void put_f32(std::vector<std::uint8_t>& out, double v) {
    float f = static_cast<float>(v);
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_u32(out, bits);
}

}  // namespace detail

inline void save_network(const NetworkSpec& net, const std::string& path) {
    net.validate();
    std::vector<std::uint8_t> out(detail::kWeightMagic, detail::kWeightMagic + 4);
    detail::put_u32(out, static_cast<std::uint32_t>(net.layers.size()));
    for (const Layer& layer : net.layers) {
        if (const auto* conv = std::get_if<ConvLayer>(&layer)) {
            out.push_back(0);
            detail::put_u16(out, static_cast<std::uint16_t>(conv->name.size()));
            out.insert(out.end(), conv->name.begin(), conv->name.end());
            detail::put_u32(out, static_cast<std::uint32_t>(conv->in_channels));
            detail::put_u32(out, static_cast<std::uint32_t>(conv->out_channels));
            detail::put_u32(out, static_cast<std::uint32_t>(conv->kernel_h));
            detail::put_u32(out, static_cast<std::uint32_t>(conv->kernel_w));
            detail::put_u32(out, static_cast<std::uint32_t>(conv->stride));
            detail::put_u32(out, static_cast<std::uint32_t>(conv->pad));
            for (double w : conv->weights) detail::put_f32(out, w);
            for (double b : conv->bias) detail::put_f32(out, b);
        } else if (const auto* relu = std::get_if<ReluLayer>(&layer)) {
            out.push_back(1);
            detail::put_u16(out, static_cast<std::uint16_t>(relu->name.size()));
            out.insert(out.end(), relu->name.begin(), relu->name.end());
        } else {
            const auto& pool = std::get<MaxPoolLayer>(layer);
            out.push_back(2);
            detail::put_u16(out, static_cast<std::uint16_t>(pool.name.size()));
            out.insert(out.end(), pool.name.begin(), pool.name.end());
            detail::put_u32(out, static_cast<std::uint32_t>(pool.kernel));
            detail::put_u32(out, static_cast<std::uint32_t>(pool.stride));
        }
    }
    std::ofstream file(path, std::ios::binary);
    if (!file) throw std::runtime_error("cannot open file for writing: " + path);
    file.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
    if (!file) throw std::runtime_error("short write: " + path);
}

inline NetworkSpec load_network(const std::string& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) throw std::runtime_error("weight file missing: " + path);
    std::vector<std::uint8_t> bytes(std::istreambuf_iterator<char>(file),
                                    std::istreambuf_iterator<char>{});
    detail::ByteReader in(bytes.data(), bytes.size(), path);

    if (in.str(4) != std::string(detail::kWeightMagic, 4))
        throw std::runtime_error("weight file magic mismatch: " + path);
    std::uint32_t count = in.u32();
    NetworkSpec net;
    for (std::uint32_t i = 0; i < count; ++i) {
        std::uint8_t kind = in.u8();
        std::string name = in.str(in.u16());
        if (kind == 0) {
            ConvLayer conv;
            conv.name = name;
            conv.in_channels = static_cast<int>(in.u32());
            conv.out_channels = static_cast<int>(in.u32());
            conv.kernel_h = static_cast<int>(in.u32());
            conv.kernel_w = static_cast<int>(in.u32());
            conv.stride = static_cast<int>(in.u32());
            conv.pad = static_cast<int>(in.u32());
            if (conv.in_channels <= 0 || conv.out_channels <= 0 || conv.kernel_h <= 0 ||
                conv.kernel_w <= 0 || conv.kernel_h > 1024 || conv.kernel_w > 1024 ||
                conv.in_channels > 65536 || conv.out_channels > 65536)
                throw std::runtime_error("weight file declares bad conv shape in '" + name +
                                         "': " + path);
            std::size_t n = static_cast<std::size_t>(conv.out_channels) * conv.in_channels *
                            conv.kernel_h * conv.kernel_w;
            conv.weights.resize(n);
            for (std::size_t w = 0; w < n; ++w) conv.weights[w] = in.f32();
            conv.bias.resize(conv.out_channels);
            for (int b = 0; b < conv.out_channels; ++b) conv.bias[b] = in.f32();
            net.layers.emplace_back(std::move(conv));
        } else if (kind == 1) {
            net.layers.emplace_back(ReluLayer{name});
        } else if (kind == 2) {
            MaxPoolLayer pool;
            pool.name = name;
            pool.kernel = static_cast<int>(in.u32());
            pool.stride = static_cast<int>(in.u32());
            net.layers.emplace_back(std::move(pool));
        } else {
            throw std::runtime_error("weight file has unknown layer kind " +
                                     std::to_string(kind) + ": " + path);
        }
    }
    if (!in.at_end())
        throw std::runtime_error("weight file has " + std::to_string(in.remaining()) +
                                 " trailing bytes (shape inconsistency): " + path);
    net.validate();
    return net;
}

/// Reference textual dump: a descriptor line per layer, then one value
/// per line for conv weights and biases.
inline void dump_network_text(const NetworkSpec& net, std::ostream& out) {
    out << "layers " << net.layers.size() << "\n";
    out.precision(17);
    for (const Layer& layer : net.layers) {
        if (const auto* conv = std::get_if<ConvLayer>(&layer)) {
            out << "conv " << conv->name << " " << conv->in_channels << " "
                << conv->out_channels << " " << conv->kernel_h << " " << conv->kernel_w << " "
                << conv->stride << " " << conv->pad << "\n";
            for (double w : conv->weights) out << w << "\n";
            for (double b : conv->bias) out << b << "\n";
        } else if (const auto* relu = std::get_if<ReluLayer>(&layer)) {
            out << "relu " << relu->name << "\n";
        } else {
            const auto& pool = std::get<MaxPoolLayer>(layer);
            out << "maxpool " << pool.name << " " << pool.kernel << " " << pool.stride << "\n";
        }
    }
}

// ---------------------------------------------------------------------------
// Architecture descriptors and seeded construction
// ---------------------------------------------------------------------------

/// Shape-only layer list for building seeded stand-in networks. The text
/// form is semicolon-separated:
///   conv:name,out,kh[,kw][,stride][,pad] ; relu:name ; pool:name,kernel[,stride]
/// Named presets: tiny-a, tiny-b, tiny-c.
struct ArchDescriptor {
    struct ConvShape {
        std::string name;
        int out_channels, kernel_h, kernel_w, stride, pad;
    };
    struct ReluShape {
        std::string name;
    };
    struct PoolShape {
        std::string name;
        int kernel, stride;
    };
    std::vector<std::variant<ConvShape, ReluShape, PoolShape>> layers;

    static ArchDescriptor preset(const std::string& name);
    static ArchDescriptor parse(const std::string& text);
};

inline ArchDescriptor ArchDescriptor::preset(const std::string& name) {
    if (name == "tiny-a")
        return parse("conv:conv1,4,3,3,1,1;relu:relu1;conv:conv2,8,3,3,1,1;relu:relu2;"
                     "pool:pool1,2,2");
    if (name == "tiny-b")
        return parse("conv:conv1,6,5,5,1,2;relu:relu1;pool:pool1,2,2;"
                     "conv:conv2,6,3,3,1,1;relu:relu2");
    if (name == "tiny-c")
        return parse("conv:conv1,4,3,3,1,1;relu:relu1;conv:conv2,4,1,1,1,0;relu:relu2;"
                     "conv:conv3,8,3,3,2,1;relu:relu3");
    throw std::invalid_argument("unknown architecture preset '" + name + "'");
}

inline ArchDescriptor ArchDescriptor::parse(const std::string& text) {
    ArchDescriptor arch;
    std::stringstream stream(text);
    std::string item;
    while (std::getline(stream, item, ';')) {
        if (item.empty()) continue;
        auto colon = item.find(':');
        if (colon == std::string::npos)
            throw std::invalid_argument("bad arch item '" + item + "' (missing ':')");
        std::string kind = item.substr(0, colon);
        std::vector<std::string> fields;
        std::stringstream rest(item.substr(colon + 1));
        std::string field;
        while (std::getline(rest, field, ',')) fields.push_back(field);
        auto num = [&](std::size_t i, int fallback) {
            if (i >= fields.size()) return fallback;
            return std::stoi(fields[i]);
        };
        if (fields.empty() || fields[0].empty())
            throw std::invalid_argument("bad arch item '" + item + "' (missing name)");
        if (kind == "conv") {
            if (fields.size() < 3)
                throw std::invalid_argument("conv arch item needs name,out,kernel: '" + item + "'");
            ConvShape c;
            c.name = fields[0];
            c.out_channels = num(1, 0);
            c.kernel_h = num(2, 0);
            c.kernel_w = num(3, c.kernel_h);
            c.stride = num(4, 1);
            c.pad = num(5, 0);
            arch.layers.emplace_back(c);
        } else if (kind == "relu") {
            arch.layers.emplace_back(ReluShape{fields[0]});
        } else if (kind == "pool") {
            if (fields.size() < 2)
                throw std::invalid_argument("pool arch item needs name,kernel: '" + item + "'");
            PoolShape p;
            p.name = fields[0];
            p.kernel = num(1, 0);
            p.stride = num(2, p.kernel);
            arch.layers.emplace_back(p);
        } else {
            throw std::invalid_argument("unknown arch layer kind '" + kind + "'");
        }
    }
    if (arch.layers.empty()) throw std::invalid_argument("empty architecture descriptor");
    return arch;
}

/// Builds a network with pseudo-random weights scaled by 1/sqrt(fan_in),
/// deterministic in (seed, arch). Values are quantized to f32 precision so
/// a save/load round trip is bit-identical.
inline NetworkSpec make_seeded_network(std::uint64_t seed, const ArchDescriptor& arch) {
    if (arch.layers.empty()) throw std::invalid_argument("make_seeded_network: empty arch");
    SeededRng rng(seed);
    NetworkSpec net;
    int channels = 3;
    for (const auto& entry : arch.layers) {
        if (const auto* c = std::get_if<ArchDescriptor::ConvShape>(&entry)) {
            ConvLayer conv;
            conv.name = c->name;
            conv.in_channels = channels;
            conv.out_channels = c->out_channels;
            conv.kernel_h = c->kernel_h;
            conv.kernel_w = c->kernel_w;
            conv.stride = c->stride;
            conv.pad = c->pad;
            double scale = 1.0 / std::sqrt(static_cast<double>(channels) * c->kernel_h * c->kernel_w);
            std::size_t n = static_cast<std::size_t>(c->out_channels) * channels * c->kernel_h *
                            c->kernel_w;
            conv.weights.resize(n);
            for (std::size_t i = 0; i < n; ++i)
                conv.weights[i] = static_cast<float>(rng.next_normal() * scale);
            conv.bias.resize(c->out_channels);
            for (int i = 0; i < c->out_channels; ++i)
                conv.bias[i] = static_cast<float>(rng.next_normal() * scale);
            channels = c->out_channels;
            net.layers.emplace_back(std::move(conv));
        } else if (const auto* r = std::get_if<ArchDescriptor::ReluShape>(&entry)) {
            net.layers.emplace_back(ReluLayer{r->name});
        } else {
            const auto& p = std::get<ArchDescriptor::PoolShape>(entry);
            net.layers.emplace_back(MaxPoolLayer{p.name, p.kernel, p.stride});
        }
    }
    net.validate();
    return net;
}

/// Accepts a preset name or a textual descriptor.
inline ArchDescriptor resolve_arch(const std::string& text) {
    if (text.find(':') == std::string::npos) return ArchDescriptor::preset(text);
    return ArchDescriptor::parse(text);
}

inline NetworkSpec make_seeded_network(std::uint64_t seed, const std::string& arch_text) {
    return make_seeded_network(seed, resolve_arch(arch_text));
}

}  // namespace facegen
