#include "sanet/stf.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace sanet {

namespace {

constexpr char kMagic[4] = {'S', 'T', 'N', 'S'};
constexpr uint32_t kVersion = 1;
constexpr uint8_t kDtypeF32 = 0;

void put_u16(std::vector<uint8_t>& out, uint16_t v) {
    out.push_back(static_cast<uint8_t>(v & 0xff));
    out.push_back(static_cast<uint8_t>(v >> 8));
}

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>((v >> (8 * i)) & 0xff));
}

struct Cursor {
    const std::vector<uint8_t>& bytes;
    size_t pos = 0;

    void need(size_t n) const {
        if (pos + n > bytes.size()) throw FormatError("stf: truncated file");
    }
    uint8_t u8() {
        need(1);
        return bytes[pos++];
    }
    uint16_t u16() {
        need(2);
        uint16_t v = static_cast<uint16_t>(bytes[pos] | (bytes[pos + 1] << 8));
        pos += 2;
        return v;
    }
    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(bytes[pos + i]) << (8 * i);
        pos += 4;
        return v;
    }
};

} // namespace

void WeightStore::put(const std::string& name, TensorRecord rec) {
    if (name.empty()) throw ValueError("weight store: empty tensor name");
    if (tensors_.count(name)) throw ValueError("weight store: duplicate tensor name: " + name);
    if (rec.dim_product() != rec.data.size())
        throw ValueError("weight store: length mismatch for " + name + ": dims imply " +
                         std::to_string(rec.dim_product()) + " values, got " + std::to_string(rec.data.size()));
    tensors_.emplace(name, std::move(rec));
}

const TensorRecord& WeightStore::get(const std::string& name) const {
    auto it = tensors_.find(name);
    if (it == tensors_.end()) throw ValueError("weight store: missing tensor: " + name);
    return it->second;
}

uint64_t WeightStore::value_count() const {
    uint64_t total = 0;
    for (const auto& [name, rec] : tensors_) total += rec.data.size();
    return total;
}

uint64_t WeightStore::value_count_prefix(const std::string& prefix) const {
    uint64_t total = 0;
    for (auto it = tensors_.lower_bound(prefix); it != tensors_.end(); ++it) {
        if (it->first.compare(0, prefix.size(), prefix) != 0) break;
        total += it->second.data.size();
    }
    return total;
}

std::vector<uint8_t> stf_bytes(const WeightStore& store) {
    std::vector<uint8_t> out;
    out.insert(out.end(), kMagic, kMagic + 4);
    put_u32(out, kVersion);
    put_u32(out, static_cast<uint32_t>(store.tensor_count()));
    for (const auto& [name, rec] : store.entries()) {
        if (name.size() > 0xffff) throw Error("stf: tensor name too long: " + name);
        put_u16(out, static_cast<uint16_t>(name.size()));
        out.insert(out.end(), name.begin(), name.end());
        out.push_back(kDtypeF32);
        out.push_back(static_cast<uint8_t>(rec.dims.size()));
        for (uint32_t d : rec.dims) put_u32(out, d);
        for (float f : rec.data) put_u32(out, std::bit_cast<uint32_t>(f));
    }
    return out;
}

WeightStore parse_stf(const std::vector<uint8_t>& bytes) {
    Cursor c{bytes};
    c.need(4);
    if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw FormatError("stf: bad magic");
    c.pos = 4;
    if (c.u32() != kVersion) throw FormatError("stf: unsupported version");
    const uint32_t count = c.u32();
    WeightStore store;
    for (uint32_t t = 0; t < count; ++t) {
        const uint16_t name_len = c.u16();
        c.need(name_len);
        std::string name(reinterpret_cast<const char*>(bytes.data() + c.pos), name_len);
        c.pos += name_len;
        if (c.u8() != kDtypeF32) throw FormatError("stf: unsupported dtype for " + name);
        const uint8_t ndim = c.u8();
        TensorRecord rec;
        rec.dims.resize(ndim);
        for (uint8_t i = 0; i < ndim; ++i) rec.dims[i] = c.u32();
        const uint64_t values = rec.dim_product();
        if (values * 4 > bytes.size() - c.pos) throw FormatError("stf: truncated file");
        rec.data.resize(values);
        for (uint64_t i = 0; i < values; ++i) rec.data[i] = std::bit_cast<float>(c.u32());
        if (store.contains(name)) throw FormatError("stf: duplicate tensor name: " + name);
        store.put(name, std::move(rec));
    }
    if (c.pos != bytes.size()) throw FormatError("stf: trailing bytes after last tensor");
    return store;
}

void write_stf(const WeightStore& store, const std::string& path) {
    const std::vector<uint8_t> bytes = stf_bytes(store);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("stf: cannot open for writing: " + path);
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw Error("stf: write failed: " + path);
}

WeightStore read_stf(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw FormatError("stf: cannot open: " + path);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return parse_stf(bytes);
}

} // namespace sanet
