#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sanet/error.hpp"

namespace sanet {

// One named tensor inside a weight store. Only f32 payloads exist today.
struct TensorRecord {
    std::vector<uint32_t> dims;
    std::vector<float> data;

    uint64_t dim_product() const {
        uint64_t p = 1;
        for (uint32_t d : dims) p *= d;
        return p;
    }
};

// Name -> tensor map with lexicographic iteration order, so serialized files
// are canonical byte-for-byte.
class WeightStore {
public:
    void put(const std::string& name, TensorRecord rec);
    bool contains(const std::string& name) const { return tensors_.count(name) != 0; }
    const TensorRecord& get(const std::string& name) const;

    size_t tensor_count() const { return tensors_.size(); }
    uint64_t value_count() const;
    uint64_t value_count_prefix(const std::string& prefix) const;
    const std::map<std::string, TensorRecord>& entries() const { return tensors_; }

private:
    std::map<std::string, TensorRecord> tensors_;
};

void write_stf(const WeightStore& store, const std::string& path);
WeightStore read_stf(const std::string& path);

std::vector<uint8_t> stf_bytes(const WeightStore& store);
WeightStore parse_stf(const std::vector<uint8_t>& bytes);

} // namespace sanet
