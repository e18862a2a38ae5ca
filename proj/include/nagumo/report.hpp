#pragma once

// Deterministic report emission: an insertion-ordered JSON tree with every
// floating-point value pinned to 17 significant digits, plus CSV writers for
// trajectories and curves. Rerunning a command with the same configuration
// must reproduce its reports byte for byte, which rules out map-ordered
// containers and shortest-roundtrip float formatting.

#include <nagumo/ode.hpp>

#include <string>
#include <utility>
#include <vector>

namespace nagumo {

inline constexpr int kSchemaVersion = 1;

// "%.17g" in the C locale; NaN and infinities have no JSON form and come out
// as null when stored in a Json tree.
std::string g17(double v);

class Json {
public:
    enum class Kind { Null, Bool, Int, Real, Str, Array, Object };

    Json() = default;
    static Json null() { return Json(); }
    static Json boolean(bool b);
    static Json integer(long long v);
    static Json real(double v);
    static Json str(std::string s);
    static Json array();
    static Json object();

    Kind kind() const { return kind_; }

    // Object field (appends, or overwrites an existing key in place).
    Json& set(const std::string& key, Json v);
    Json& set_num(const std::string& key, double v) { return set(key, real(v)); }
    Json& set_int(const std::string& key, long long v) { return set(key, integer(v)); }
    Json& set_bool(const std::string& key, bool v) { return set(key, boolean(v)); }
    Json& set_str(const std::string& key, std::string v) { return set(key, str(std::move(v))); }

    // Array element.
    Json& push(Json v);
    Json& push_num(double v) { return push(real(v)); }

    std::string dump(int indent = 2) const;

private:
    Kind kind_ = Kind::Null;
    bool b_ = false;
    long long i_ = 0;
    double d_ = 0.0;
    std::string s_;
    std::vector<Json> arr_;
    std::vector<std::pair<std::string, Json>> obj_;

    void dump_to(std::string& out, int indent, int depth) const;
};

// CSV bodies; both use %.17g cells. Trajectories list the accepted step
// boundaries under the header "t,x,y"; curves are plain "x,y" polylines.
std::string trajectory_csv(const Trajectory& tr);
std::string planar_path_csv(const PlanarPath& p);

// Writes content to path, creating parent directories; throws Error when the
// file cannot be written.
void save_file(const std::string& path, const std::string& content);

}  // namespace nagumo
