#pragma once

#include <filesystem>
#include <map>
#include <mutex>

#include "halluforge/backends.hpp"

namespace halluforge {

/// Fixture table for one endpoint: request digest -> canned response body.
/// Immutable once constructed, so it is safe to share across threads.
class FixtureTable {
public:
    FixtureTable() = default;

    /// Loads a JSONL file of {"request_digest": ..., "response": ...} lines.
    /// A missing file yields an empty table (every lookup then misses).
    static FixtureTable load(const std::filesystem::path& file);

    /// In-memory construction for tests: (request body, response) per entry.
    static FixtureTable from_pairs(
        const std::string& endpoint,
        const std::vector<std::pair<json, json>>& entries);

    /// Looks up the canned response; throws ErrorCode::fixture_miss when the
    /// digest is unknown, naming the endpoint and echoing the request.
    const json& lookup(const std::string& endpoint, const json& request) const;

    std::size_t size() const { return by_digest_.size(); }

private:
    std::map<std::string, json> by_digest_;
};

/// Replays recorded responses for all five roles from a fixture directory
/// (ground.jsonl, vqa.jsonl, judge.jsonl, embed.jsonl, generate.jsonl).
/// Unknown requests fail fast instead of inventing data, which keeps test
/// runs honest about their coverage.
BackendSet make_mock_backends(const std::filesystem::path& fixture_dir);

/// Assembles a mock set from in-memory tables; any table may be empty.
BackendSet make_mock_backends(FixtureTable ground, FixtureTable vqa, FixtureTable judge,
                              FixtureTable embed, FixtureTable generate);

/// Wraps a live BackendSet, forwarding every call while remembering the
/// (digest, request, response) triple. flush() writes one JSONL fixture per
/// endpoint, sorted by digest so reruns produce identical bytes.
class FixtureRecorder {
public:
    FixtureRecorder(BackendSet inner, std::filesystem::path out_dir);

    /// The recording facade; hand this to the pipeline in place of `inner`.
    BackendSet backends();

    /// Stores one exchange, keyed by request digest; duplicates collapse.
    /// Called by the facade's adapters, rarely needed directly.
    void remember(const std::string& endpoint, const json& request, const json& response);

    void flush();

private:
    BackendSet inner_;
    std::filesystem::path out_dir_;
    std::mutex mu_;
    // endpoint -> digest -> {request, response}
    std::map<std::string, std::map<std::string, json>> recorded_;
};

}  // namespace halluforge
