#pragma once
// In-memory knowledge graph store: a typed directed multigraph, immutable
// after load, safe for unlimited concurrent readers.
//
// Entities are deduplicated by their normalized key (lowercase, collapsed
// whitespace); the first surface form seen becomes the canonical id.
// Adjacency is CSR-style with every span ordered by (relation name,
// neighbor norm_key), so traversal order is deterministic byte for byte.

#include <algorithm>
#include <array>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "mirage/error.hpp"
#include "mirage/text.hpp"

namespace mirage {

struct Entity {
    std::string id;        // canonical surface form, first one seen
    std::string norm_key;  // lowercased, whitespace-collapsed
};

struct Triple {
    std::string head;
    std::string relation;
    std::string tail;

    friend bool operator==(const Triple&, const Triple&) = default;
};

// A directed simple path; consecutive steps connect head-to-tail and no
// entity repeats along the way.
struct Chain {
    std::vector<Triple> steps;

    std::size_t length() const { return steps.size(); }

    friend bool operator==(const Chain&, const Chain&) = default;
};

struct GraphStats {
    std::size_t entity_count = 0;
    std::size_t triple_count = 0;
    std::size_t relation_count = 0;
    std::map<std::size_t, std::size_t> out_degree_histogram;

    friend bool operator==(const GraphStats&, const GraphStats&) = default;
};

enum class GraphFormat { tsv, jsonl };

class KnowledgeGraph {
public:
    KnowledgeGraph() = default;

    // Triple file: one triple per line. TSV fields are separated by a single
    // TAB; lines starting with '#' and blank lines are skipped. JSONL lines
    // are objects with string fields "h", "r", "t". Duplicate triples
    // collapse; zero triples is an error.
    static KnowledgeGraph load_file(const std::string& path, GraphFormat format) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw IoError("cannot open graph file: " + path);
        return load_stream(in, format, path);
    }

    static KnowledgeGraph load_stream(std::istream& in, GraphFormat format,
                                      const std::string& source = "<stream>") {
        KnowledgeGraph g;
        std::string line;
        std::size_t line_no = 0;
        std::vector<std::array<std::uint32_t, 3>> triples;
        while (std::getline(in, line)) {
            ++line_no;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            std::string stripped = trim(line);
            if (stripped.empty()) continue;
            if (format == GraphFormat::tsv) {
                if (stripped.front() == '#') continue;
                auto fields = split(line, '\t');
                if (fields.size() != 3) {
                    throw ParseError(source + ":" + std::to_string(line_no) +
                                     ": expected 3 tab-separated fields, got " +
                                     std::to_string(fields.size()));
                }
                g.intern_record(triples, trim(fields[0]), trim(fields[1]), trim(fields[2]),
                                source, line_no);
            } else {
                nlohmann::json obj;
                try {
                    obj = nlohmann::json::parse(stripped);
                } catch (const nlohmann::json::exception& e) {
                    throw ParseError(source + ":" + std::to_string(line_no) +
                                     ": invalid JSON: " + e.what());
                }
                if (!obj.is_object() || !obj.contains("h") || !obj.contains("r") ||
                    !obj.contains("t") || !obj["h"].is_string() || !obj["r"].is_string() ||
                    !obj["t"].is_string()) {
                    throw ParseError(source + ":" + std::to_string(line_no) +
                                     ": expected object with string fields h, r, t");
                }
                g.intern_record(triples, trim(obj["h"].get<std::string>()),
                                trim(obj["r"].get<std::string>()),
                                trim(obj["t"].get<std::string>()), source, line_no);
            }
        }
        if (triples.empty()) throw ParseError(source + ": empty graph (no triples)");
        g.build_indexes(std::move(triples));
        return g;
    }

    std::size_t entity_count() const { return entities_.size(); }
    std::size_t triple_count() const { return triple_count_; }
    std::size_t relation_count() const { return relations_.size(); }

    const Entity& entity(std::uint32_t index) const { return entities_[index]; }

    // Lookup by normalized key of the given text.
    std::optional<std::uint32_t> find_entity(std::string_view text) const {
        auto it = norm_to_entity_.find(norm_key(text));
        if (it == norm_to_entity_.end()) return std::nullopt;
        return it->second;
    }

    // Relation names in ascending byte order.
    std::vector<std::string> relation_names() const {
        std::vector<std::string> names = relations_;
        std::sort(names.begin(), names.end());
        return names;
    }

    // At most `per_relation_cap` outgoing triples per relation type, grouped
    // by ascending relation name, neighbors in ascending norm_key order.
    std::vector<Triple> neighbors(std::string_view entity_text,
                                  std::size_t per_relation_cap) const {
        if (per_relation_cap < 1) throw InvalidArgumentError("neighbor cap must be >= 1");
        std::uint32_t head = require_entity(entity_text);
        std::vector<Triple> out;
        std::uint32_t cur_rel = kNoRelation;
        std::size_t taken = 0;
        for (std::size_t i = out_offset_[head]; i < out_offset_[head + 1]; ++i) {
            const Edge& e = out_edges_[i];
            if (e.relation != cur_rel) {
                cur_rel = e.relation;
                taken = 0;
            }
            if (taken < per_relation_cap) {
                out.push_back(make_triple(head, e.relation, e.neighbor));
                ++taken;
            }
        }
        return out;
    }

    // All outgoing triples in index order (unbounded neighbors).
    std::vector<Triple> outgoing(std::string_view entity_text) const {
        std::uint32_t head = require_entity(entity_text);
        std::vector<Triple> out;
        for (std::size_t i = out_offset_[head]; i < out_offset_[head + 1]; ++i)
            out.push_back(make_triple(head, out_edges_[i].relation, out_edges_[i].neighbor));
        return out;
    }

    // All incoming triples in index order.
    std::vector<Triple> incoming(std::string_view entity_text) const {
        std::uint32_t tail = require_entity(entity_text);
        std::vector<Triple> out;
        for (std::size_t i = in_offset_[tail]; i < in_offset_[tail + 1]; ++i)
            out.push_back(make_triple(in_edges_[i].neighbor, in_edges_[i].relation, tail));
        return out;
    }

    // Up to `max_chains` directed simple chains from `from` to `to` of length
    // <= max_hops, shortest first; within a length, ordered lexicographically
    // by the sequence of (relation name, entity norm_key) per step.
    std::vector<Chain> find_chains(std::string_view from, std::string_view to,
                                   std::size_t max_hops, std::size_t max_chains) const {
        if (max_hops < 1) throw InvalidArgumentError("max hops must be >= 1");
        if (max_chains < 1) throw InvalidArgumentError("max chains must be >= 1");
        std::uint32_t src = require_entity(from);
        std::uint32_t dst = require_entity(to);
        if (src == dst) throw InvalidArgumentError("chain endpoints must differ");

        std::vector<std::uint32_t> dist = backward_distances(dst, max_hops);
        std::vector<Chain> chains;
        if (dist[src] > max_hops) return chains;

        std::vector<bool> on_path(entities_.size(), false);
        std::vector<std::size_t> path;  // indexes into out_edges_
        for (std::size_t len = 1; len <= max_hops && chains.size() < max_chains; ++len) {
            on_path[src] = true;
            dfs_exact(src, dst, len, dist, on_path, path, max_chains, chains);
            on_path[src] = false;
        }
        return chains;
    }

    GraphStats stats() const {
        GraphStats s;
        s.entity_count = entities_.size();
        s.triple_count = triple_count_;
        s.relation_count = relations_.size();
        for (std::size_t i = 0; i < entities_.size(); ++i) {
            std::size_t deg = out_offset_[i + 1] - out_offset_[i];
            ++s.out_degree_histogram[deg];
        }
        return s;
    }

private:
    static constexpr std::uint32_t kNoRelation = 0xffffffffu;

    struct Edge {
        std::uint32_t relation;
        std::uint32_t neighbor;  // tail for out-edges, head for in-edges
    };

    std::uint32_t require_entity(std::string_view text) const {
        auto idx = find_entity(text);
        if (!idx) throw NotFoundError("unknown entity: " + std::string(text));
        return *idx;
    }

    Triple make_triple(std::uint32_t head, std::uint32_t rel, std::uint32_t tail) const {
        return Triple{entities_[head].id, relations_[rel], entities_[tail].id};
    }

    std::uint32_t intern_entity(const std::string& surface, const std::string& source,
                                std::size_t line_no) {
        std::string key = norm_key(surface);
        if (key.empty()) {
            throw ParseError(source + ":" + std::to_string(line_no) + ": empty entity field");
        }
        auto it = norm_to_entity_.find(key);
        if (it != norm_to_entity_.end()) return it->second;
        auto idx = static_cast<std::uint32_t>(entities_.size());
        entities_.push_back(Entity{surface, key});
        norm_to_entity_.emplace(std::move(key), idx);
        return idx;
    }

    std::uint32_t intern_relation(const std::string& name, const std::string& source,
                                  std::size_t line_no) {
        if (name.empty()) {
            throw ParseError(source + ":" + std::to_string(line_no) + ": empty relation field");
        }
        auto it = relation_to_index_.find(name);
        if (it != relation_to_index_.end()) return it->second;
        auto idx = static_cast<std::uint32_t>(relations_.size());
        relations_.push_back(name);
        relation_to_index_.emplace(name, idx);
        return idx;
    }

    void intern_record(std::vector<std::array<std::uint32_t, 3>>& triples,
                       const std::string& head, const std::string& rel,
                       const std::string& tail, const std::string& source,
                       std::size_t line_no) {
        std::uint32_t h = intern_entity(head, source, line_no);
        std::uint32_t r = intern_relation(rel, source, line_no);
        std::uint32_t t = intern_entity(tail, source, line_no);
        triples.push_back({h, r, t});
    }

    void build_indexes(std::vector<std::array<std::uint32_t, 3>> triples) {
        std::sort(triples.begin(), triples.end());
        triples.erase(std::unique(triples.begin(), triples.end()), triples.end());
        triple_count_ = triples.size();

        // Rank arrays give the deterministic orderings without re-comparing
        // strings during sorts.
        std::vector<std::uint32_t> rel_rank = rank_by(relations_.size(), [&](std::uint32_t a,
                                                                             std::uint32_t b) {
            return relations_[a] < relations_[b];
        });
        std::vector<std::uint32_t> ent_rank = rank_by(entities_.size(), [&](std::uint32_t a,
                                                                            std::uint32_t b) {
            return entities_[a].norm_key < entities_[b].norm_key;
        });

        auto build_side = [&](bool outgoing_side, std::vector<Edge>& edges,
                              std::vector<std::size_t>& offsets) {
            std::vector<std::array<std::uint32_t, 3>> recs = triples;
            std::sort(recs.begin(), recs.end(),
                      [&](const auto& a, const auto& b) {
                          std::uint32_t ka = outgoing_side ? a[0] : a[2];
                          std::uint32_t kb = outgoing_side ? b[0] : b[2];
                          if (ka != kb) return ka < kb;
                          if (a[1] != b[1]) return rel_rank[a[1]] < rel_rank[b[1]];
                          std::uint32_t na = outgoing_side ? a[2] : a[0];
                          std::uint32_t nb = outgoing_side ? b[2] : b[0];
                          return ent_rank[na] < ent_rank[nb];
                      });
            edges.reserve(recs.size());
            offsets.assign(entities_.size() + 1, 0);
            for (const auto& rec : recs) {
                std::uint32_t key = outgoing_side ? rec[0] : rec[2];
                std::uint32_t nbr = outgoing_side ? rec[2] : rec[0];
                ++offsets[key + 1];
                edges.push_back(Edge{rec[1], nbr});
            }
            for (std::size_t i = 1; i < offsets.size(); ++i) offsets[i] += offsets[i - 1];
            // edges were appended in key-sorted order, so spans line up
        };
        build_side(true, out_edges_, out_offset_);
        build_side(false, in_edges_, in_offset_);
    }

    template <typename Less>
    static std::vector<std::uint32_t> rank_by(std::size_t n, Less less) {
        std::vector<std::uint32_t> order(n);
        for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<std::uint32_t>(i);
        std::sort(order.begin(), order.end(), less);
        std::vector<std::uint32_t> rank(n);
        for (std::size_t i = 0; i < n; ++i) rank[order[i]] = static_cast<std::uint32_t>(i);
        return rank;
    }

    // Shortest hop counts to `dst` over in-edges, capped at max_hops; values
    // beyond the cap stay at max_hops + 1. Used only to prune dead branches,
    // so the enumeration result is unchanged.
    std::vector<std::uint32_t> backward_distances(std::uint32_t dst,
                                                  std::size_t max_hops) const {
        std::vector<std::uint32_t> dist(entities_.size(),
                                        static_cast<std::uint32_t>(max_hops + 1));
        dist[dst] = 0;
        std::vector<std::uint32_t> frontier{dst};
        for (std::size_t depth = 1; depth <= max_hops && !frontier.empty(); ++depth) {
            std::vector<std::uint32_t> next;
            for (std::uint32_t node : frontier) {
                for (std::size_t i = in_offset_[node]; i < in_offset_[node + 1]; ++i) {
                    std::uint32_t prev = in_edges_[i].neighbor;
                    if (dist[prev] > max_hops) {
                        dist[prev] = static_cast<std::uint32_t>(depth);
                        next.push_back(prev);
                    }
                }
            }
            frontier = std::move(next);
        }
        return dist;
    }

    void dfs_exact(std::uint32_t node, std::uint32_t dst, std::size_t remaining,
                   const std::vector<std::uint32_t>& dist, std::vector<bool>& on_path,
                   std::vector<std::size_t>& path, std::size_t max_chains,
                   std::vector<Chain>& chains) const {
        for (std::size_t i = out_offset_[node];
             i < out_offset_[node + 1] && chains.size() < max_chains; ++i) {
            std::uint32_t nxt = out_edges_[i].neighbor;
            if (remaining == 1) {
                if (nxt != dst) continue;
                path.push_back(i);
                chains.push_back(materialize(path));
                path.pop_back();
                continue;
            }
            if (on_path[nxt] || nxt == dst) continue;  // simple paths only
            if (dist[nxt] > remaining - 1) continue;
            on_path[nxt] = true;
            path.push_back(i);
            dfs_exact(nxt, dst, remaining - 1, dist, on_path, path, max_chains, chains);
            path.pop_back();
            on_path[nxt] = false;
        }
    }

    Chain materialize(const std::vector<std::size_t>& path) const {
        Chain c;
        c.steps.reserve(path.size());
        for (std::size_t edge_index : path) {
            // recover the head by locating the span the edge belongs to
            auto it = std::upper_bound(out_offset_.begin(), out_offset_.end(), edge_index);
            auto head = static_cast<std::uint32_t>(it - out_offset_.begin() - 1);
            c.steps.push_back(
                make_triple(head, out_edges_[edge_index].relation, out_edges_[edge_index].neighbor));
        }
        return c;
    }

    std::vector<Entity> entities_;
    std::unordered_map<std::string, std::uint32_t> norm_to_entity_;
    std::vector<std::string> relations_;
    std::unordered_map<std::string, std::uint32_t> relation_to_index_;
    std::size_t triple_count_ = 0;
    std::vector<Edge> out_edges_;
    std::vector<std::size_t> out_offset_;
    std::vector<Edge> in_edges_;
    std::vector<std::size_t> in_offset_;
};

}  // namespace mirage
