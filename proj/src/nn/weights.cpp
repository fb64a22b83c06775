#include "breathsense/nn/weights.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "breathsense/byte_io.hpp"
#include "breathsense/error.hpp"

namespace breathsense::nn {

const WeightEntry* WeightStore::find(std::string_view name) const {
    for (const auto& e : entries)
        if (e.name == name) return &e;
    return nullptr;
}

void WeightStore::add(WeightEntry entry) {
    if (find(entry.name)) throw Error(ErrorCode::InvalidArgument, "duplicate weight entry '" + entry.name + "'");
    entries.push_back(std::move(entry));
}

namespace {

std::size_t element_count(const std::vector<std::uint32_t>& shape) {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

}  // namespace

std::vector<std::uint8_t> encode_weight_store(const WeightStore& store) {
    ByteWriter w;
    w.raw("BRW1");
    w.u16(WeightStore::kVersion);
    w.u32(static_cast<std::uint32_t>(store.entries.size()));
    for (const auto& e : store.entries) {
        if (e.name.size() > 0xFFFF) throw Error(ErrorCode::InvalidArgument, "weight name too long");
        if (e.shape.size() > 0xFF) throw Error(ErrorCode::InvalidArgument, "weight rank too large");
        if (element_count(e.shape) != e.values.size())
            throw Error(ErrorCode::ShapeMismatch, "entry '" + e.name + "' payload does not match its shape");
        w.u16(static_cast<std::uint16_t>(e.name.size()));
        w.raw(e.name);
        w.u8(static_cast<std::uint8_t>(e.shape.size()));
        for (auto d : e.shape) w.u32(d);
        for (float v : e.values) w.f32(v);
    }
    return std::move(w).take();
}

WeightStore decode_weight_store(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 4 || std::string_view(reinterpret_cast<const char*>(bytes.data()), 4) != "BRW1")
        throw Error(ErrorCode::BadMagic, "not a BRW1 weight store");
    ByteReader r(bytes.subspan(4));
    const std::uint16_t version = r.u16();
    if (version != WeightStore::kVersion)
        throw Error(ErrorCode::BadMagic, "unsupported BRW1 version " + std::to_string(version));
    const std::uint32_t count = r.u32();
    WeightStore store;
    for (std::uint32_t i = 0; i < count; ++i) {
        WeightEntry e;
        e.name = r.str(r.u16());
        const std::uint8_t rank = r.u8();
        for (std::uint8_t d = 0; d < rank; ++d) e.shape.push_back(r.u32());
        const std::size_t n = element_count(e.shape);
        if (r.remaining() / 4 < n) throw Error(ErrorCode::TruncatedPayload, "entry '" + e.name + "' payload truncated");
        e.values.resize(n);
        for (auto& v : e.values) v = r.f32();
        store.add(std::move(e));
    }
    if (r.remaining() != 0) throw Error(ErrorCode::TruncatedPayload, "trailing bytes after last entry");
    return store;
}

template <typename T>
WeightStore save_weights(Model<T>& model) {
    WeightStore store;
    for (const auto& [name, param] : model.state()) {
        WeightEntry e;
        e.name = name;
        for (auto d : param->shape) e.shape.push_back(static_cast<std::uint32_t>(d));
        e.values.assign(param->value.begin(), param->value.end());
        store.add(std::move(e));
    }
    return store;
}

template <typename T>
void load_weights(Model<T>& model, const WeightStore& store) {
    auto state = model.state();
    std::size_t used = 0;
    // Validate everything before mutating the model.
    for (const auto& [name, param] : state) {
        const WeightEntry* e = store.find(name);
        if (!e) throw Error(ErrorCode::ShapeMismatchOnLoad, "missing entry '" + name + "'");
        if (e->shape.size() != param->shape.size() ||
            !std::equal(e->shape.begin(), e->shape.end(), param->shape.begin(),
                        [](std::uint32_t a, std::size_t b) { return a == b; }))
            throw Error(ErrorCode::ShapeMismatchOnLoad, "entry '" + name + "' has a different shape than the model");
        if (name.ends_with(".running_var"))
            for (float v : e->values)
                if (!(v > 0.0f)) throw Error(ErrorCode::ShapeMismatchOnLoad, "non-positive running variance in '" + name + "'");
        ++used;
    }
    const auto model_entries = static_cast<std::size_t>(
        std::count_if(store.entries.begin(), store.entries.end(), [](const WeightEntry& e) { return !e.name.starts_with("__"); }));
    if (model_entries != used) throw Error(ErrorCode::ShapeMismatchOnLoad, "store holds entries the model does not have");

    for (const auto& [name, param] : state) {
        const WeightEntry* e = store.find(name);
        std::transform(e->values.begin(), e->values.end(), param->value.begin(), [](float v) { return static_cast<T>(v); });
    }
}

template WeightStore save_weights<float>(Model<float>&);
template WeightStore save_weights<double>(Model<double>&);
template void load_weights<float>(Model<float>&, const WeightStore&);
template void load_weights<double>(Model<double>&, const WeightStore&);

}  // namespace breathsense::nn
