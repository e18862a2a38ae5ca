#include <nagumo/report.hpp>

#include <nagumo/errors.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <utility>

namespace nagumo {

std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/* ------------------------------------------------------------------ */
/*  Json tree                                                           */
/* ------------------------------------------------------------------ */

Json Json::boolean(bool b) {
    Json j;
    j.kind_ = Kind::Bool;
    j.b_ = b;
    return j;
}

Json Json::integer(long long v) {
    Json j;
    j.kind_ = Kind::Int;
    j.i_ = v;
    return j;
}

Json Json::real(double v) {
    Json j;
    if (!std::isfinite(v)) return j;  // null; JSON has no NaN/inf
    j.kind_ = Kind::Real;
    j.d_ = v;
    return j;
}

Json Json::str(std::string s) {
    Json j;
    j.kind_ = Kind::Str;
    j.s_ = std::move(s);
    return j;
}

Json Json::array() {
    Json j;
    j.kind_ = Kind::Array;
    return j;
}

Json Json::object() {
    Json j;
    j.kind_ = Kind::Object;
    return j;
}

Json& Json::set(const std::string& key, Json v) {
    if (kind_ != Kind::Object) throw DomainError("Json::set on a non-object");
    for (auto& [k, val] : obj_) {
        if (k == key) {
            val = std::move(v);
            return *this;
        }
    }
    obj_.emplace_back(key, std::move(v));
    return *this;
}

Json& Json::push(Json v) {
    if (kind_ != Kind::Array) throw DomainError("Json::push on a non-array");
    arr_.push_back(std::move(v));
    return *this;
}

namespace {

void escape_to(std::string& out, const std::string& s) {
    out += '"';
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            case '\r': out += "\\r"; break;
            default:
                if (static_cast<unsigned char>(c) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof buf, "\\u%04x", c);
                    out += buf;
                } else {
                    out += c;
                }
        }
    }
    out += '"';
}

void pad(std::string& out, int indent, int depth) {
    out.append(static_cast<std::size_t>(indent) * depth, ' ');
}

}  // namespace

void Json::dump_to(std::string& out, int indent, int depth) const {
    switch (kind_) {
        case Kind::Null: out += "null"; return;
        case Kind::Bool: out += b_ ? "true" : "false"; return;
        case Kind::Int: out += std::to_string(i_); return;
        case Kind::Real: out += g17(d_); return;
        case Kind::Str: escape_to(out, s_); return;
        case Kind::Array: {
            if (arr_.empty()) {
                out += "[]";
                return;
            }
            out += "[\n";
            for (std::size_t i = 0; i < arr_.size(); ++i) {
                pad(out, indent, depth + 1);
                arr_[i].dump_to(out, indent, depth + 1);
                out += (i + 1 < arr_.size()) ? ",\n" : "\n";
            }
            pad(out, indent, depth);
            out += ']';
            return;
        }
        case Kind::Object: {
            if (obj_.empty()) {
                out += "{}";
                return;
            }
            out += "{\n";
            for (std::size_t i = 0; i < obj_.size(); ++i) {
                pad(out, indent, depth + 1);
                escape_to(out, obj_[i].first);
                out += ": ";
                obj_[i].second.dump_to(out, indent, depth + 1);
                out += (i + 1 < obj_.size()) ? ",\n" : "\n";
            }
            pad(out, indent, depth);
            out += '}';
            return;
        }
    }
}

std::string Json::dump(int indent) const {
    std::string out;
    dump_to(out, indent, 0);
    out += '\n';
    return out;
}

/* ------------------------------------------------------------------ */
/*  CSV and files                                                       */
/* ------------------------------------------------------------------ */

std::string trajectory_csv(const Trajectory& tr) {
    std::string out = "t,x,y\n";
    for (std::size_t i = 0; i < tr.ts.size(); ++i) {
        out += g17(tr.ts[i]);
        out += ',';
        out += g17(tr.states[i].x);
        out += ',';
        out += g17(tr.states[i].y);
        out += '\n';
    }
    return out;
}

std::string planar_path_csv(const PlanarPath& p) {
    std::string out = "x,y\n";
    for (const PhasePoint& q : p.pts) {
        out += g17(q.x);
        out += ',';
        out += g17(q.y);
        out += '\n';
    }
    return out;
}

void save_file(const std::string& path, const std::string& content) {
    const std::filesystem::path fp(path);
    if (fp.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(fp.parent_path(), ec);
        if (ec) throw Error("cannot create directory " + fp.parent_path().string());
    }
    std::ofstream out(fp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + path + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error("short write to " + path);
}

}  // namespace nagumo
