#include "posereg/container.hpp"

#include <cstring>
#include <fstream>

namespace posereg {

namespace {

constexpr char kMagic[4] = {'P', 'R', 'T', 'C'};
constexpr uint32_t kVersion = 1;

void put_u32(std::string& out, uint32_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
    out.push_back(static_cast<char>((v >> 16) & 0xff));
    out.push_back(static_cast<char>((v >> 24) & 0xff));
}

void put_u64(std::string& out, uint64_t v) {
    put_u32(out, static_cast<uint32_t>(v & 0xffffffffULL));
    put_u32(out, static_cast<uint32_t>(v >> 32));
}

class Reader {
public:
    Reader(std::string data, std::string path) : data_(std::move(data)), path_(std::move(path)) {}

    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<uint8_t>(data_[pos_ + i]);
        pos_ += 4;
        return v;
    }
    uint64_t u64() {
        const uint64_t lo = u32();
        const uint64_t hi = u32();
        return lo | (hi << 32);
    }
    uint8_t u8() {
        need(1);
        return static_cast<uint8_t>(data_[pos_++]);
    }
    std::string bytes(size_t n) {
        need(n);
        std::string s = data_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    bool done() const { return pos_ == data_.size(); }

private:
    void need(size_t n) {
        if (pos_ + n > data_.size()) throw ParseError("truncated tensor file: " + path_);
    }
    std::string data_;
    std::string path_;
    size_t pos_ = 0;
};

} // namespace

void write_tensor_file(const std::string& path, std::span<const NamedTensor> tensors) {
    std::string out;
    out.append(kMagic, 4);
    put_u32(out, kVersion);
    put_u32(out, static_cast<uint32_t>(tensors.size()));
    for (const NamedTensor& t : tensors) {
        if (t.data.size() != t.element_count())
            throw IoError("tensor '" + t.name + "' data size does not match its dims");
        put_u32(out, static_cast<uint32_t>(t.name.size()));
        out.append(t.name);
        out.push_back(static_cast<char>(t.dtype));
        put_u32(out, static_cast<uint32_t>(t.dims.size()));
        for (int64_t d : t.dims) put_u32(out, static_cast<uint32_t>(d));
        if (t.dtype == 0) {
            for (double v : t.data) {
                const float f = static_cast<float>(v);
                uint32_t bits;
                std::memcpy(&bits, &f, 4);
                put_u32(out, bits);
            }
        } else if (t.dtype == 1) {
            for (double v : t.data) {
                uint64_t bits;
                std::memcpy(&bits, &v, 8);
                put_u64(out, bits);
            }
        } else {
            throw IoError("unsupported dtype " + std::to_string(t.dtype));
        }
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open for writing: " + path);
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw IoError("write failed: " + path);
}

std::vector<NamedTensor> read_tensor_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open: " + path);
    std::string data((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

    Reader r(std::move(data), path);
    if (r.bytes(4) != std::string(kMagic, 4)) throw ParseError("bad magic in tensor file: " + path);
    const uint32_t version = r.u32();
    if (version != kVersion) throw ParseError("unsupported tensor file version " + std::to_string(version));
    const uint32_t count = r.u32();

    std::vector<NamedTensor> tensors;
    tensors.reserve(count);
    for (uint32_t i = 0; i < count; ++i) {
        NamedTensor t;
        const uint32_t name_len = r.u32();
        t.name = r.bytes(name_len);
        t.dtype = r.u8();
        const uint32_t rank = r.u32();
        for (uint32_t d = 0; d < rank; ++d) t.dims.push_back(static_cast<int64_t>(r.u32()));
        const size_t n = t.element_count();
        t.data.resize(n);
        if (t.dtype == 0) {
            for (size_t e = 0; e < n; ++e) {
                const uint32_t bits = r.u32();
                float v;
                std::memcpy(&v, &bits, 4);
                t.data[e] = static_cast<double>(v);
            }
        } else if (t.dtype == 1) {
            for (size_t e = 0; e < n; ++e) {
                const uint64_t bits = r.u64();
                double v;
                std::memcpy(&v, &bits, 8);
                t.data[e] = v;
            }
        } else {
            throw ParseError("unsupported dtype in tensor file: " + std::to_string(t.dtype));
        }
        tensors.push_back(std::move(t));
    }
    if (!r.done()) throw ParseError("trailing bytes in tensor file: " + path);
    return tensors;
}

const NamedTensor& find_tensor(std::span<const NamedTensor> tensors, const std::string& name) {
    for (const NamedTensor& t : tensors)
        if (t.name == name) return t;
    throw MissingField("tensor '" + name + "'");
}

} // namespace posereg
