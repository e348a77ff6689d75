#pragma once

#include <cstring>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "fedecg/error.hpp"
#include "fedecg/tensor.hpp"

namespace fedecg {

// Ordered, named collection of tensors: the unit exchanged between clients
// and the server. Names are unique; insertion order is the canonical order
// used for serialization.
template <typename T>
class ParamSet {
  public:
    using Entry = std::pair<std::string, Tensor<T>>;

    void add(std::string name, Tensor<T> tensor) {
        if (index_.count(name))
            throw ValueError("ParamSet: duplicate name '" + name + "'");
        index_.emplace(name, entries_.size());
        entries_.emplace_back(std::move(name), std::move(tensor));
    }

    bool contains(std::string_view name) const { return index_.count(std::string(name)) > 0; }

    const Tensor<T>& get(std::string_view name) const {
        const auto it = index_.find(std::string(name));
        if (it == index_.end()) throw ValueError("ParamSet: no entry named '" + std::string(name) + "'");
        return entries_[it->second].second;
    }

    Tensor<T>& get(std::string_view name) {
        const auto it = index_.find(std::string(name));
        if (it == index_.end()) throw ValueError("ParamSet: no entry named '" + std::string(name) + "'");
        return entries_[it->second].second;
    }

    const Tensor<T>* find(std::string_view name) const {
        const auto it = index_.find(std::string(name));
        return it == index_.end() ? nullptr : &entries_[it->second].second;
    }

    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }

    const Entry& operator[](std::size_t i) const { return entries_[i]; }
    Entry& operator[](std::size_t i) { return entries_[i]; }

    auto begin() { return entries_.begin(); }
    auto end() { return entries_.end(); }
    auto begin() const { return entries_.begin(); }
    auto end() const { return entries_.end(); }

    std::int64_t total_elements() const {
        std::int64_t n = 0;
        for (const auto& [name, t] : entries_) n += t.numel();
        return n;
    }

    // Same names in the same order with equal shapes.
    bool aligned_with(const ParamSet& other) const {
        if (entries_.size() != other.entries_.size()) return false;
        for (std::size_t i = 0; i < entries_.size(); ++i) {
            if (entries_[i].first != other.entries_[i].first) return false;
            if (entries_[i].second.shape() != other.entries_[i].second.shape()) return false;
        }
        return true;
    }

    // Same names and shapes regardless of order (used where only per-name
    // association matters).
    bool name_aligned_with(const ParamSet& other) const {
        if (entries_.size() != other.entries_.size()) return false;
        for (const auto& [name, t] : entries_) {
            const Tensor<T>* o = other.find(name);
            if (!o || o->shape() != t.shape()) return false;
        }
        return true;
    }

  private:
    std::vector<Entry> entries_;
    std::unordered_map<std::string, std::size_t> index_;
};

template <typename T>
ParamSet<T> ps_zeros_like(const ParamSet<T>& ps) {
    ParamSet<T> out;
    for (const auto& [name, t] : ps) out.add(name, zeros_like(t));
    return out;
}

template <typename T>
void require_name_aligned(const ParamSet<T>& a, const ParamSet<T>& b, const char* what) {
    if (!a.name_aligned_with(b))
        throw AlignmentError(std::string(what) + ": ParamSets are not name/shape-aligned");
}

// dst[name] += alpha * src[name] for every entry of dst.
template <typename T>
void ps_axpy(ParamSet<T>& dst, T alpha, const ParamSet<T>& src) {
    require_name_aligned(dst, src, "ps_axpy");
    for (auto& [name, t] : dst) axpy_inplace(t, alpha, src.get(name));
}

template <typename T>
void ps_scale(ParamSet<T>& ps, T alpha) {
    for (auto& [name, t] : ps)
        for (auto& v : t.values()) v *= alpha;
}

// out = a - b, per name.
template <typename T>
ParamSet<T> ps_sub(const ParamSet<T>& a, const ParamSet<T>& b) {
    require_name_aligned(a, b, "ps_sub");
    ParamSet<T> out;
    for (const auto& [name, t] : a) {
        Tensor<T> d = t;
        axpy_inplace(d, T(-1), b.get(name));
        out.add(name, std::move(d));
    }
    return out;
}

template <typename T>
T ps_max_abs_diff(const ParamSet<T>& a, const ParamSet<T>& b) {
    require_name_aligned(a, b, "ps_max_abs_diff");
    T worst = 0;
    for (const auto& [name, t] : a) {
        const Tensor<T>& o = b.get(name);
        for (std::int64_t i = 0; i < t.numel(); ++i)
            worst = std::max(worst, std::abs(t[i] - o[i]));
    }
    return worst;
}

template <typename T>
bool ps_bitwise_equal(const ParamSet<T>& a, const ParamSet<T>& b) {
    if (!a.aligned_with(b)) return false;
    for (const auto& [name, t] : a) {
        const Tensor<T>& o = b.get(name);
        for (std::int64_t i = 0; i < t.numel(); ++i)
            if (std::memcmp(&t[i], &o[i], sizeof(T)) != 0) return false;
    }
    return true;
}

}  // namespace fedecg
