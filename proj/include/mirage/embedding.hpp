#pragma once
// Sparse text embeddings for fuzzy entity matching.
//
// The default embedder maps normalized text to byte-trigram counts. At the
// full dimension every distinct trigram owns its own coordinate, so equal
// keys embed identically and cosine similarity is exact for them.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mirage/error.hpp"
#include "mirage/text.hpp"

namespace mirage {

// One coordinate index per possible byte trigram (2^24); collision-free.
inline constexpr std::uint32_t kTrigramDim = 1u << 24;

// Sparse non-negative vector; entries sorted by index, values > 0.
struct EmbeddingVector {
    std::uint32_t dim = 0;
    std::vector<std::pair<std::uint32_t, double>> entries;

    friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;

    double norm() const {
        double s = 0.0;
        for (const auto& [idx, v] : entries) s += v * v;
        return std::sqrt(s);
    }
};

class Embedder {
public:
    virtual ~Embedder() = default;
    virtual EmbeddingVector embed(std::string_view text) const = 0;
    virtual std::uint32_t dim() const = 0;
};

// Cosine similarity in [0, 1]. Identical vectors short-circuit to exactly
// 1.0 before any floating-point accumulation.
inline double similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.dim != b.dim) throw InvalidArgumentError("embedding dimension mismatch");
    if (a.entries == b.entries) return a.entries.empty() ? 0.0 : 1.0;
    double dot = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.entries.size() && j < b.entries.size()) {
        if (a.entries[i].first < b.entries[j].first) {
            ++i;
        } else if (a.entries[i].first > b.entries[j].first) {
            ++j;
        } else {
            dot += a.entries[i].second * b.entries[j].second;
            ++i;
            ++j;
        }
    }
    double denom = a.norm() * b.norm();
    if (denom == 0.0) return 0.0;
    double cos = dot / denom;
    if (cos < 0.0) return 0.0;
    if (cos > 1.0) return 1.0;
    return cos;
}

class TrigramEmbedder final : public Embedder {
public:
    explicit TrigramEmbedder(std::uint32_t dim = kTrigramDim) : dim_(dim) {
        if (dim_ < 1) throw InvalidArgumentError("embedding dimension must be >= 1");
    }

    std::uint32_t dim() const override { return dim_; }

    EmbeddingVector embed(std::string_view text) const override {
        std::string key = norm_key(text);
        if (key.empty()) throw InvalidArgumentError("cannot embed empty text");
        // pad short keys so even single characters produce one trigram
        while (key.size() < 3) key.push_back('_');
        std::vector<std::pair<std::uint32_t, double>> counts;
        counts.reserve(key.size() - 2);
        for (std::size_t i = 0; i + 3 <= key.size(); ++i) {
            auto b0 = static_cast<std::uint32_t>(static_cast<unsigned char>(key[i]));
            auto b1 = static_cast<std::uint32_t>(static_cast<unsigned char>(key[i + 1]));
            auto b2 = static_cast<std::uint32_t>(static_cast<unsigned char>(key[i + 2]));
            counts.emplace_back(((b0 << 16) | (b1 << 8) | b2) % dim_, 1.0);
        }
        std::sort(counts.begin(), counts.end());
        // merge repeated trigrams into counts
        std::vector<std::pair<std::uint32_t, double>> merged;
        for (const auto& [idx, v] : counts) {
            if (!merged.empty() && merged.back().first == idx)
                merged.back().second += v;
            else
                merged.emplace_back(idx, v);
        }
        return EmbeddingVector{dim_, std::move(merged)};
    }

private:
    std::uint32_t dim_;
};

inline std::shared_ptr<const Embedder> default_embedder() {
    static const auto instance = std::make_shared<const TrigramEmbedder>();
    return instance;
}

}  // namespace mirage
