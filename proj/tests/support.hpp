// Shared helpers for the test binaries: scratch directories, file slurping,
// and closure-backed backend doubles for exercising single operations
// without fixture files.
#pragma once

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

#include <doctest.h>

#include "halluforge/backends.hpp"

namespace hft {

namespace fs = std::filesystem;
using halluforge::json;

inline fs::path fixture_root() {
    return fs::path(HALLUFORGE_FIXTURE_DIR);
}

/// Unique scratch directory, removed on scope exit.
class TempDir {
public:
    TempDir() {
        static std::atomic<unsigned> counter{0};
        auto base = fs::temp_directory_path();
        path_ = base / ("halluforge-test-" + std::to_string(::getpid()) + "-" +
                        std::to_string(counter.fetch_add(1)));
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& leaf) const { return path_ / leaf; }

private:
    fs::path path_;
};

inline std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE_MESSAGE(in.good(), "cannot open " << p.string());
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

inline void write_file(const fs::path& p, const std::string& body) {
    fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    out << body;
}

// ---------------------------------------------------------------------------
// Closure-backed backends

class FnGrounding : public halluforge::GroundingBackend {
public:
    using Fn = std::function<halluforge::GroundingResult(const std::string&,
                                                         const halluforge::ObjectLabel&)>;
    explicit FnGrounding(Fn fn) : fn_(std::move(fn)) {}
    halluforge::GroundingResult ground(const std::string& image_ref,
                                       const halluforge::ObjectLabel& object) override {
        return fn_(image_ref, object);
    }

private:
    Fn fn_;
};

class FnVqa : public halluforge::VqaBackend {
public:
    using Fn = std::function<std::string(const halluforge::VqaQuery&)>;
    explicit FnVqa(Fn fn) : fn_(std::move(fn)) {}
    std::string ask(const halluforge::VqaQuery& query) override { return fn_(query); }

private:
    Fn fn_;
};

class FnJudge : public halluforge::JudgeBackend {
public:
    using Fn = std::function<std::string(halluforge::JudgeKind, const json&)>;
    explicit FnJudge(Fn fn) : fn_(std::move(fn)) {}
    std::string judge(halluforge::JudgeKind kind, const json& payload) override {
        return fn_(kind, payload);
    }

private:
    Fn fn_;
};

class FnEmbed : public halluforge::EmbedBackend {
public:
    using Fn = std::function<std::vector<double>(const std::string&)>;
    explicit FnEmbed(Fn fn) : fn_(std::move(fn)) {}
    std::vector<double> embed(const std::string& text) override { return fn_(text); }

private:
    Fn fn_;
};

}  // namespace hft
