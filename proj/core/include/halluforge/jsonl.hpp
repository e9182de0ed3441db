#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "halluforge/datamodel.hpp"

namespace halluforge {

/// Streams records out of a JSONL file. Blank lines are skipped; a malformed
/// line throws ErrorCode::serialization with its line number.
class JsonlReader {
public:
    explicit JsonlReader(const std::filesystem::path& path);

    /// Returns false at end of file, otherwise parses the next record.
    bool next(json& out);

    std::size_t line() const { return line_; }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
    std::ifstream in_;
    std::size_t line_ = 0;
};

/// Writes canonical JSONL to `<path>.tmp` and renames into place on
/// commit(). A crash mid-write leaves the previous file untouched, so
/// downstream stages never observe a half-written artifact.
class AtomicJsonlWriter {
public:
    explicit AtomicJsonlWriter(const std::filesystem::path& path);
    ~AtomicJsonlWriter();

    AtomicJsonlWriter(const AtomicJsonlWriter&) = delete;
    AtomicJsonlWriter& operator=(const AtomicJsonlWriter&) = delete;

    void write(const json& record);

    template <typename T>
    void write_record(const T& record) {
        write(json(record));
    }

    std::size_t written() const { return count_; }

    /// Flushes and renames the temp file over the target. No-op if already
    /// committed; without it the temp file is removed on destruction.
    void commit();

private:
    std::filesystem::path path_;
    std::filesystem::path tmp_;
    std::ofstream out_;
    std::size_t count_ = 0;
    bool committed_ = false;
};

template <typename T>
std::vector<T> read_jsonl(const std::filesystem::path& path) {
    JsonlReader reader(path);
    std::vector<T> out;
    json j;
    while (reader.next(j)) {
        try {
            out.push_back(j.get<T>());
        } catch (const json::exception& e) {
            fail(ErrorCode::serialization,
                 path.string() + ":" + std::to_string(reader.line()) + ": " + e.what());
        }
    }
    return out;
}

template <typename T>
void write_jsonl(const std::filesystem::path& path, const std::vector<T>& records) {
    AtomicJsonlWriter writer(path);
    for (const auto& r : records) writer.write_record(r);
    writer.commit();
}

/// Same atomic temp-then-rename discipline for single-document files
/// (manifests, reports).
void write_text_atomic(const std::filesystem::path& path, const std::string& body);

// ---------------------------------------------------------------------------
// Run manifests

/// Manifest path convention: `<artifact>.manifest.json` next to the artifact.
std::filesystem::path manifest_path_for(const std::filesystem::path& artifact);

void write_manifest(const std::filesystem::path& artifact, const RunManifest& manifest);

/// Reads the manifest for an artifact; empty optional when none exists.
std::optional<RunManifest> read_manifest(const std::filesystem::path& artifact);

}  // namespace halluforge
