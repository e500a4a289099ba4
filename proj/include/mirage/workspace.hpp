#pragma once
// Shared single-assignment workspace the coordinator drives the pipeline
// through. Each stage key (decomposition, chain:{i}, conflicts, final)
// transitions pending -> ready or pending -> failed exactly once; payloads
// are immutable after publication and publication is atomic.

#include <any>
#include <condition_variable>
#include <map>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "mirage/error.hpp"

namespace mirage {

enum class StageStatus { pending, ready, failed };

inline std::string_view stage_status_name(StageStatus s) {
    switch (s) {
        case StageStatus::pending: return "pending";
        case StageStatus::ready: return "ready";
        case StageStatus::failed: return "failed";
    }
    throw InvariantError("unreachable stage status");
}

class Workspace {
public:
    // Publish a payload; a second put on the same key is an invariant
    // violation regardless of status.
    void put(const std::string& key, std::any payload, StageStatus status = StageStatus::ready) {
        if (status == StageStatus::pending)
            throw InvalidArgumentError("cannot publish a pending status");
        {
            std::lock_guard<std::mutex> lock(mutex_);
            if (entries_.count(key)) throw InvariantError("workspace key published twice: " + key);
            entries_.emplace(key, Entry{status, std::move(payload)});
        }
        cv_.notify_all();
    }

    StageStatus status(const std::string& key) const {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = entries_.find(key);
        return it == entries_.end() ? StageStatus::pending : it->second.status;
    }

    // Payload access for ready or failed keys; pending keys have no payload.
    template <typename T>
    const T& get(const std::string& key) const {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = entries_.find(key);
        if (it == entries_.end()) throw NotFoundError("workspace key pending: " + key);
        const T* value = std::any_cast<T>(&it->second.payload);
        if (!value) throw InvalidArgumentError("workspace payload type mismatch for: " + key);
        return *value;
    }

    // Block until every listed key has left pending.
    void wait_all(const std::vector<std::string>& keys) const {
        std::unique_lock<std::mutex> lock(mutex_);
        cv_.wait(lock, [&] {
            for (const std::string& key : keys)
                if (!entries_.count(key)) return false;
            return true;
        });
    }

    std::vector<std::string> keys() const {
        std::lock_guard<std::mutex> lock(mutex_);
        std::vector<std::string> out;
        out.reserve(entries_.size());
        for (const auto& [key, _] : entries_) out.push_back(key);
        return out;
    }

private:
    struct Entry {
        StageStatus status;
        std::any payload;
    };

    mutable std::mutex mutex_;
    mutable std::condition_variable cv_;
    std::map<std::string, Entry> entries_;
};

}  // namespace mirage
