#pragma once

#include <bit>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace evidential {

// Fixed-width bit vector over an enumerated frame of configurations.
// Comparison order is the numeric value of the bit pattern (bit i weighs 2^i),
// which is the canonical ordering used everywhere focal sets are sorted.
class Bitset {
public:
    Bitset() = default;

    explicit Bitset(std::size_t bit_count)
        : size_(bit_count), words_((bit_count + 63) / 64, 0) {}

    static Bitset ones(std::size_t bit_count) {
        Bitset b(bit_count);
        for (auto& w : b.words_) w = ~std::uint64_t{0};
        b.mask_tail();
        return b;
    }

    static Bitset single(std::size_t bit_count, std::size_t bit) {
        Bitset b(bit_count);
        b.set(bit);
        return b;
    }

    std::size_t size() const { return size_; }

    bool test(std::size_t i) const {
        return (words_[i / 64] >> (i % 64)) & 1u;
    }

    void set(std::size_t i) { words_[i / 64] |= std::uint64_t{1} << (i % 64); }
    void reset(std::size_t i) { words_[i / 64] &= ~(std::uint64_t{1} << (i % 64)); }

    std::size_t count() const {
        std::size_t n = 0;
        for (auto w : words_) n += static_cast<std::size_t>(std::popcount(w));
        return n;
    }

    bool none() const {
        for (auto w : words_)
            if (w) return false;
        return true;
    }

    bool any() const { return !none(); }

    Bitset operator&(const Bitset& o) const {
        Bitset r(size_);
        for (std::size_t i = 0; i < words_.size(); ++i) r.words_[i] = words_[i] & o.words_[i];
        return r;
    }

    Bitset operator|(const Bitset& o) const {
        Bitset r(size_);
        for (std::size_t i = 0; i < words_.size(); ++i) r.words_[i] = words_[i] | o.words_[i];
        return r;
    }

    Bitset complement() const {
        Bitset r(size_);
        for (std::size_t i = 0; i < words_.size(); ++i) r.words_[i] = ~words_[i];
        r.mask_tail();
        return r;
    }

    bool is_subset_of(const Bitset& o) const {
        for (std::size_t i = 0; i < words_.size(); ++i)
            if (words_[i] & ~o.words_[i]) return false;
        return true;
    }

    bool intersects(const Bitset& o) const {
        for (std::size_t i = 0; i < words_.size(); ++i)
            if (words_[i] & o.words_[i]) return true;
        return false;
    }

    bool operator==(const Bitset& o) const { return size_ == o.size_ && words_ == o.words_; }

    std::strong_ordering operator<=>(const Bitset& o) const {
        if (size_ != o.size_) return size_ <=> o.size_;
        for (std::size_t i = words_.size(); i-- > 0;) {
            if (words_[i] != o.words_[i]) return words_[i] <=> o.words_[i];
        }
        return std::strong_ordering::equal;
    }

    // Visits set bits in ascending order.
    template <typename F>
    void for_each_bit(F&& fn) const {
        for (std::size_t wi = 0; wi < words_.size(); ++wi) {
            std::uint64_t w = words_[wi];
            while (w) {
                std::size_t bit = static_cast<std::size_t>(std::countr_zero(w));
                fn(wi * 64 + bit);
                w &= w - 1;
            }
        }
    }

    std::vector<std::size_t> bits() const {
        std::vector<std::size_t> out;
        out.reserve(count());
        for_each_bit([&](std::size_t i) { out.push_back(i); });
        return out;
    }

    // Low 64 bits as an integer mask; only meaningful when size() <= 64.
    std::uint64_t to_mask() const { return words_.empty() ? 0 : words_[0]; }

    static Bitset from_mask(std::size_t bit_count, std::uint64_t mask) {
        Bitset b(bit_count);
        if (!b.words_.empty()) b.words_[0] = mask;
        b.mask_tail();
        return b;
    }

private:
    void mask_tail() {
        if (size_ % 64 != 0 && !words_.empty())
            words_.back() &= (std::uint64_t{1} << (size_ % 64)) - 1;
    }

    std::size_t size_ = 0;
    std::vector<std::uint64_t> words_;
};

}  // namespace evidential
