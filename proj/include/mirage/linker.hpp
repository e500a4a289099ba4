#pragma once
// Entity linking: map a free-text mention to the best graph entity by
// embedding similarity, subject to a score threshold.
//
// Entity vectors are computed once at construction; link() is a pure read
// and safe to call from many threads.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mirage/embedding.hpp"
#include "mirage/error.hpp"
#include "mirage/kg.hpp"

namespace mirage {

struct LinkMatch {
    std::uint32_t entity_index = 0;
    std::string entity_id;  // canonical surface form
    double score = 0.0;
};

using LinkResult = std::optional<LinkMatch>;

class EntityLinker {
public:
    EntityLinker(const KnowledgeGraph& graph, std::shared_ptr<const Embedder> embedder)
        : graph_(graph), embedder_(std::move(embedder)) {
        if (!embedder_) throw InvalidArgumentError("entity linker needs an embedder");
        if (graph_.entity_count() == 0) throw InvalidArgumentError("entity linker needs a non-empty graph");
        vectors_.reserve(graph_.entity_count());
        for (std::uint32_t i = 0; i < graph_.entity_count(); ++i)
            vectors_.push_back(embedder_->embed(graph_.entity(i).id));
    }

    // Best-scoring entity with score >= threshold, or nullopt. Ties break
    // toward the entity with the smaller norm_key so results never depend
    // on load order.
    LinkResult link(std::string_view mention, double threshold) const {
        if (!(threshold > 0.0) || threshold > 1.0)
            throw InvalidArgumentError("link threshold must be in (0, 1]");
        EmbeddingVector probe = embedder_->embed(mention);
        double best_score = -1.0;
        std::uint32_t best_index = 0;
        for (std::uint32_t i = 0; i < vectors_.size(); ++i) {
            double s = similarity(probe, vectors_[i]);
            if (s > best_score ||
                (s == best_score &&
                 graph_.entity(i).norm_key < graph_.entity(best_index).norm_key)) {
                best_score = s;
                best_index = i;
            }
        }
        if (best_score < threshold) return std::nullopt;
        return LinkMatch{best_index, graph_.entity(best_index).id, best_score};
    }

    const Embedder& embedder() const { return *embedder_; }

private:
    const KnowledgeGraph& graph_;
    std::shared_ptr<const Embedder> embedder_;
    std::vector<EmbeddingVector> vectors_;
};

}  // namespace mirage
