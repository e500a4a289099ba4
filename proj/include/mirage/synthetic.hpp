#pragma once
// Deterministic synthetic graph generation for benchmarks and stress tests.
//
// Given (nodes, triples, relations, seed) the generator emits a TSV triple
// file with exactly those counts: every node appears, every relation is
// used, and triples are unique. Same spec + seed => byte-identical output.

#include <cstdint>
#include <fstream>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <unordered_set>

#include "mirage/error.hpp"
#include "mirage/kg.hpp"

namespace mirage {

struct SyntheticGraphSpec {
    std::size_t nodes = 1000;
    std::size_t triples = 5000;
    std::size_t relations = 6;
    std::uint64_t seed = 42;

    void validate() const {
        if (nodes < 2) throw InvalidArgumentError("synthetic graph needs >= 2 nodes");
        if (relations < 1) throw InvalidArgumentError("synthetic graph needs >= 1 relation");
        if (nodes < relations)
            throw InvalidArgumentError("synthetic graph needs nodes >= relations");
        if (triples < nodes)
            throw InvalidArgumentError("synthetic graph needs triples >= nodes");
        if (triples > nodes * (nodes - 1) * relations)
            throw InvalidArgumentError("synthetic graph cannot fit that many unique triples");
    }
};

namespace detail {

// xorshift-free bounded draw on a fully specified engine; rejection keeps it
// unbiased and stable across standard libraries (uniform_int_distribution
// is not pinned by the standard).
inline std::uint64_t bounded_draw(std::mt19937_64& rng, std::uint64_t n) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() / n * n;
    std::uint64_t v = rng();
    while (v >= limit) v = rng();
    return v % n;
}

inline std::size_t digit_width(std::size_t max_value, std::size_t floor_width) {
    std::size_t width = 1;
    while (max_value >= 10) {
        max_value /= 10;
        ++width;
    }
    return width < floor_width ? floor_width : width;
}

inline std::string padded(std::size_t value, std::size_t width, char prefix0,
                          const char* prefix_rest) {
    std::string digits = std::to_string(value);
    std::string out(1, prefix0);
    out += prefix_rest;
    if (digits.size() < width) out.append(width - digits.size(), '0');
    out += digits;
    return out;
}

}  // namespace detail

inline std::string synthetic_node_name(std::size_t index, std::size_t nodes) {
    return detail::padded(index, detail::digit_width(nodes - 1, 6), 'n', "");
}

inline std::string synthetic_relation_name(std::size_t index, std::size_t relations) {
    return detail::padded(index, detail::digit_width(relations - 1, 2), 'r', "el_");
}

inline void generate_synthetic_tsv(const SyntheticGraphSpec& spec, std::ostream& out) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    const std::size_t n = spec.nodes;
    const std::size_t r = spec.relations;

    auto pack = [n, r](std::size_t h, std::size_t rel, std::size_t t) {
        return (static_cast<std::uint64_t>(h) * r + rel) * n + t;
    };
    std::unordered_set<std::uint64_t> seen;
    seen.reserve(spec.triples * 2);

    auto emit = [&](std::size_t h, std::size_t rel, std::size_t t) {
        out << synthetic_node_name(h, n) << '\t' << synthetic_relation_name(rel, r) << '\t'
            << synthetic_node_name(t, n) << '\n';
    };
    auto draw_tail = [&](std::size_t head) {
        // draw from [0, n-1) then shift past `head` to exclude self-loops
        std::size_t t = static_cast<std::size_t>(detail::bounded_draw(rng, n - 1));
        return t >= head ? t + 1 : t;
    };

    // One seeded triple per node covers every node and (nodes >= relations)
    // every relation.
    for (std::size_t h = 0; h < n; ++h) {
        std::size_t rel = h % r;
        std::size_t t = draw_tail(h);
        seen.insert(pack(h, rel, t));
        emit(h, rel, t);
    }
    while (seen.size() < spec.triples) {
        std::size_t h = static_cast<std::size_t>(detail::bounded_draw(rng, n));
        std::size_t rel = static_cast<std::size_t>(detail::bounded_draw(rng, r));
        std::size_t t = draw_tail(h);
        if (seen.insert(pack(h, rel, t)).second) emit(h, rel, t);
    }
}

inline void generate_synthetic_file(const SyntheticGraphSpec& spec, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write synthetic graph: " + path);
    generate_synthetic_tsv(spec, out);
}

inline KnowledgeGraph generate_synthetic_graph(const SyntheticGraphSpec& spec) {
    std::stringstream buf;
    generate_synthetic_tsv(spec, buf);
    return KnowledgeGraph::load_stream(buf, GraphFormat::tsv, "<synthetic>");
}

}  // namespace mirage
