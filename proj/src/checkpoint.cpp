#include "kddt/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace kddt {

namespace {

constexpr char kMagic[] = "KDDT1";
constexpr std::size_t kMagicLen = 5;

void write_u32(std::ostream& os, std::uint32_t v) {
    unsigned char buf[4] = {static_cast<unsigned char>(v & 0xff),
                            static_cast<unsigned char>((v >> 8) & 0xff),
                            static_cast<unsigned char>((v >> 16) & 0xff),
                            static_cast<unsigned char>((v >> 24) & 0xff)};
    os.write(reinterpret_cast<const char*>(buf), 4);
}

std::uint32_t read_u32(std::istream& is, const std::string& what) {
    unsigned char buf[4];
    is.read(reinterpret_cast<char*>(buf), 4);
    if (!is) throw std::runtime_error("checkpoint: truncated while reading " + what);
    return static_cast<std::uint32_t>(buf[0]) | (static_cast<std::uint32_t>(buf[1]) << 8) |
           (static_cast<std::uint32_t>(buf[2]) << 16) | (static_cast<std::uint32_t>(buf[3]) << 24);
}

void write_f32(std::ostream& os, const float* src, std::size_t n) {
    static_assert(sizeof(float) == 4);
    // Host is little-endian on every supported target; bytes go out verbatim.
    os.write(reinterpret_cast<const char*>(src), static_cast<std::streamsize>(n * 4));
}

}  // namespace

void save_checkpoint(const ParameterStore& store, const std::string& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("checkpoint: cannot open '" + path + "' for writing");
    os.write(kMagic, kMagicLen);
    for (const auto& [name, t] : store) {  // std::map iterates lexicographically
        write_u32(os, static_cast<std::uint32_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_u32(os, static_cast<std::uint32_t>(t->shape.size()));
        for (int e : t->shape) write_u32(os, static_cast<std::uint32_t>(e));
        write_f32(os, t->data.data(), t->data.size());
    }
    if (!os) throw std::runtime_error("checkpoint: write failed for '" + path + "'");
}

ParameterStore load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("checkpoint: cannot open '" + path + "'");
    char magic[kMagicLen];
    is.read(magic, kMagicLen);
    if (!is || std::memcmp(magic, kMagic, kMagicLen) != 0) {
        throw std::runtime_error("checkpoint: bad magic in '" + path + "'");
    }
    ParameterStore store;
    while (true) {
        is.peek();
        if (is.eof()) break;
        std::uint32_t name_len = read_u32(is, "name length");
        std::string name(name_len, '\0');
        is.read(name.data(), name_len);
        if (!is) throw std::runtime_error("checkpoint: truncated name in '" + path + "'");
        std::uint32_t rank = read_u32(is, "rank of '" + name + "'");
        std::vector<int> shape(rank);
        for (auto& e : shape) e = static_cast<int>(read_u32(is, "extent of '" + name + "'"));
        auto t = Tensor::zeros(shape, true);
        is.read(reinterpret_cast<char*>(t->data.data()),
                static_cast<std::streamsize>(t->data.size() * 4));
        if (!is) throw std::runtime_error("checkpoint: truncated data for '" + name + "'");
        store.add(name, t);
    }
    return store;
}

void load_checkpoint_into(const std::string& path, ParameterStore& into) {
    ParameterStore loaded = load_checkpoint(path);
    for (const auto& [name, t] : loaded) {
        if (!into.has(name)) {
            throw std::runtime_error("checkpoint: parameter '" + name +
                                     "' not present in target store");
        }
        const TensorPtr& dst = into.get(name);
        if (dst->shape != t->shape) {
            throw std::runtime_error("checkpoint: shape mismatch for '" + name + "': stored " +
                                     shape_str(t->shape) + ", target " + shape_str(dst->shape));
        }
        dst->data = t->data;
    }
}

}  // namespace kddt
