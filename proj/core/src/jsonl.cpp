#include "halluforge/jsonl.hpp"

#include <system_error>

namespace halluforge {

namespace fs = std::filesystem;

JsonlReader::JsonlReader(const fs::path& path) : path_(path), in_(path, std::ios::binary) {
    require(in_.good(), ErrorCode::io, "cannot open '" + path.string() + "'");
}

bool JsonlReader::next(json& out) {
    std::string line;
    while (std::getline(in_, line)) {
        ++line_;
        if (line.empty()) continue;
        out = json::parse(line, nullptr, /*allow_exceptions=*/false);
        if (out.is_discarded())
            fail(ErrorCode::serialization,
                 path_.string() + ":" + std::to_string(line_) + ": malformed JSON line");
        return true;
    }
    return false;
}

AtomicJsonlWriter::AtomicJsonlWriter(const fs::path& path)
    : path_(path), tmp_(path.string() + ".tmp") {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    out_.open(tmp_, std::ios::binary | std::ios::trunc);
    require(out_.good(), ErrorCode::io, "cannot open '" + tmp_.string() + "' for writing");
}

AtomicJsonlWriter::~AtomicJsonlWriter() {
    if (!committed_) {
        out_.close();
        std::error_code ec;
        fs::remove(tmp_, ec);  // best effort, destructor must not throw
    }
}

void AtomicJsonlWriter::write(const json& record) {
    require(!committed_, ErrorCode::precondition, "writer already committed");
    out_ << serialize_line(record) << '\n';
    ++count_;
}

void AtomicJsonlWriter::commit() {
    if (committed_) return;
    out_.flush();
    require(out_.good(), ErrorCode::io, "write to '" + tmp_.string() + "' failed");
    out_.close();
    std::error_code ec;
    fs::rename(tmp_, path_, ec);
    require(!ec, ErrorCode::io,
            "rename '" + tmp_.string() + "' -> '" + path_.string() + "': " + ec.message());
    committed_ = true;
}

void write_text_atomic(const fs::path& path, const std::string& body) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp(path.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        require(out.good(), ErrorCode::io, "cannot open '" + tmp.string() + "' for writing");
        out << body;
        out.flush();
        require(out.good(), ErrorCode::io, "write to '" + tmp.string() + "' failed");
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    require(!ec, ErrorCode::io,
            "rename '" + tmp.string() + "' -> '" + path.string() + "': " + ec.message());
}

fs::path manifest_path_for(const fs::path& artifact) {
    return fs::path(artifact.string() + ".manifest.json");
}

void write_manifest(const fs::path& artifact, const RunManifest& manifest) {
    write_text_atomic(manifest_path_for(artifact), serialize_line(json(manifest)) + "\n");
}

std::optional<RunManifest> read_manifest(const fs::path& artifact) {
    fs::path path = manifest_path_for(artifact);
    std::ifstream in(path, std::ios::binary);
    if (!in.good()) return std::nullopt;
    json j = json::parse(in, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded())
        fail(ErrorCode::serialization, "malformed manifest '" + path.string() + "'");
    try {
        return j.get<RunManifest>();
    } catch (const json::exception& e) {
        fail(ErrorCode::serialization, "manifest '" + path.string() + "': " + e.what());
    }
}

}  // namespace halluforge
