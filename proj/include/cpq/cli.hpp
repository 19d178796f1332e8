#pragma once

#include "json.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace cpq::cli {

inline constexpr const char* kEngineVersion = "cpq-1";
inline constexpr const char* kCacheEnv = "CPQ_CACHE_DIR";

enum Exit { kPass = 0, kVerifyFail = 1, kBadConfig = 2, kConventionUnresolved = 3, kCacheError = 4 };

struct RunConfig {
    std::string command;
    int N = 2;
    bool symbolic = true;
    std::vector<std::string> samples; // rationals as text
    int degree = 2;
    std::string case_name;            // free | red1 | red2 | all
    std::string calculus;             // gamma | gamma-tilde | gamma-tilde-tilde
    bool factorization = false;
    std::string corrupt;              // coefficient to overwrite with q^2
    std::string cache_dir;
    std::string format = "json";
    int patience = 20;
    int stride = 1;
    std::string sphere;               // sphere family restricted to CP (G1 .. Gt3)
    std::string alpha = "1", tau = "1", omega = "1", psi = "1", rho = "1", lambda = "1"; // Q(q) text, lambda may be inf
    bool allow_large_symbolic = false;
};

// Content-addressed result store; entries carry their key and a checksum.
class Cache {
public:
    explicit Cache(std::string dir) : dir_(std::move(dir)) {}
    bool enabled() const { return !dir_.empty(); }
    // nullopt on miss; sets corrupt when an entry existed but failed validation
    std::optional<nlohmann::json> load(const nlohmann::json& key, bool& corrupt) const;
    void store(const nlohmann::json& key, const nlohmann::json& payload) const; // atomic
    std::string path_for(const nlohmann::json& key) const;

private:
    std::string dir_;
};

uint64_t fnv1a(const std::string& s);

// argv without the program name; output goes to out, diagnostics to err.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

std::string to_markdown(const nlohmann::json& j);

} // namespace cpq::cli
