#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "breathsense/nn/model.hpp"

namespace breathsense::nn {

/// BRW1 container:
///   "BRW1" | u16 version | u32 entry count |
///   per entry: u16 name length | UTF-8 name | u8 rank | u32 dims[rank] | f32 payload
/// All integers and floats little-endian.
struct WeightEntry {
    std::string name;
    std::vector<std::uint32_t> shape;
    std::vector<float> values;

    bool operator==(const WeightEntry&) const = default;
};

struct WeightStore {
    static constexpr std::uint16_t kVersion = 1;

    std::vector<WeightEntry> entries;

    const WeightEntry* find(std::string_view name) const;
    void add(WeightEntry entry);  // rejects duplicate names

    bool operator==(const WeightStore&) const = default;
};

std::vector<std::uint8_t> encode_weight_store(const WeightStore& store);
WeightStore decode_weight_store(std::span<const std::uint8_t> bytes);

/// Every parameter and buffer of the model, in layer order.
template <typename T>
WeightStore save_weights(Model<T>& model);

/// Entries whose names start with "__" are metadata and ignored here.
/// Throws ShapeMismatchOnLoad for missing, extra, or reshaped entries.
template <typename T>
void load_weights(Model<T>& model, const WeightStore& store);

}  // namespace breathsense::nn
