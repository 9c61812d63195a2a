#pragma once

// Mesh ingestion (JSON or OFF plus a lengths file), mesh writing, and trace /
// event emission. Doubles are written with 17 significant digits.

#include "yamabe/flow.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace yamabe::io {

struct MeshData {
    Triangulation triangulation;
    PLMetric metric;
    bool has_lengths{};   // false when every edge defaulted to length 1
};

namespace detail {

[[noreturn]] inline void bad(const std::string& source, const std::string& what)
{
    throw Error(ErrorCode::BadMeshFile, source + ": " + what);
}

inline std::size_t line_of(std::string_view text, std::size_t byte)
{
    byte = std::min(byte, text.size());
    return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

inline nlohmann::json parse_json(std::string_view text, const std::string& source)
{
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        bad(source, "line " + std::to_string(line_of(text, e.byte)) + ": malformed JSON (" + e.what() + ")");
    }
}

inline Index as_index(const nlohmann::json& v, const std::string& source, const std::string& field)
{
    if (!v.is_number_integer() || v.get<long long>() < 0)
        bad(source, "field '" + field + "' must be a non-negative integer");
    return static_cast<Index>(v.get<long long>());
}

inline std::optional<Edge> parse_edge_key(std::string_view key)
{
    const auto dash = key.find('-');
    if (dash == std::string_view::npos || dash == 0 || dash + 1 == key.size())
        return std::nullopt;
    auto digits = [](std::string_view s) {
        return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c) != 0; });
    };
    const auto a = key.substr(0, dash), b = key.substr(dash + 1);
    if (!digits(a) || !digits(b))
        return std::nullopt;
    return Edge(std::stoull(std::string(a)), std::stoull(std::string(b)));
}

inline PLMetric make_metric(const Triangulation& t, std::vector<double> lengths, const std::string& source)
{
    try {
        return PLMetric::from_lengths(t, std::move(lengths));
    } catch (const Error& e) {
        bad(source, std::string("edge lengths rejected: ") + e.what());
    }
}

/// Fills per-edge lengths from a JSON object {"i-j": len}. Every edge must be
/// given exactly once.
inline std::vector<double> lengths_from_json(const nlohmann::json& obj, const Triangulation& t,
                                             const std::string& source, const std::string& field)
{
    if (!obj.is_object())
        bad(source, "field '" + field + "' must be an object of \"i-j\": length");
    std::vector<double> out(t.edge_count(), std::numeric_limits<double>::quiet_NaN());
    for (const auto& [key, value] : obj.items()) {
        const auto e = parse_edge_key(key);
        if (!e)
            bad(source, "field '" + field + "." + key + "': key must look like \"i-j\"");
        const auto idx = t.find_edge(e->a, e->b);
        if (!idx)
            bad(source, "field '" + field + "." + key + "': not an edge of the triangulation");
        if (!value.is_number())
            bad(source, "field '" + field + "." + key + "': length must be a number");
        if (!std::isnan(out[*idx]))
            bad(source, "field '" + field + "." + key + "': edge given twice");
        out[*idx] = value.get<double>();
    }
    for (Index e = 0; e < out.size(); ++e)
        if (std::isnan(out[e]))
            bad(source, "field '" + field + "': missing length for edge " + std::to_string(t.edge(e).a) + "-"
                            + std::to_string(t.edge(e).b));
    return out;
}

inline std::string format_double(double x)
{
    std::ostringstream os;
    os << std::setprecision(17) << x;
    return os.str();
}

} // namespace detail

inline std::string read_text(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text(const std::filesystem::path& path, std::string_view text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "' for writing");
    out << text;
    out.flush();
    if (!out)
        throw Error(ErrorCode::IoError, "write to '" + path.string() + "' failed");
}

/// {"vertices": N, "faces": [[i,j,k], ...], "edge_lengths": {"i-j": len, ...}}.
/// Without edge_lengths every edge has length 1.
inline MeshData parse_mesh_json(std::string_view text, const std::string& source = "<mesh>")
{
    const nlohmann::json doc = detail::parse_json(text, source);
    if (!doc.is_object())
        detail::bad(source, "top level must be an object");
    for (const auto& [key, value] : doc.items())
        if (key != "vertices" && key != "faces" && key != "edge_lengths")
            detail::bad(source, "unknown field '" + key + "'");
    if (!doc.contains("faces"))
        detail::bad(source, "missing field 'faces'");
    const auto& jf = doc.at("faces");
    if (!jf.is_array())
        detail::bad(source, "field 'faces' must be an array");
    std::vector<Face> faces;
    for (std::size_t f = 0; f < jf.size(); ++f) {
        const std::string field = "faces[" + std::to_string(f) + "]";
        if (!jf[f].is_array() || jf[f].size() != 3)
            detail::bad(source, "field '" + field + "' must hold three vertex indices");
        Face face{};
        for (std::size_t r = 0; r < 3; ++r)
            face[r] = detail::as_index(jf[f][r], source, field + "[" + std::to_string(r) + "]");
        faces.push_back(face);
    }
    std::optional<Index> n;
    if (doc.contains("vertices"))
        n = detail::as_index(doc.at("vertices"), source, "vertices");

    MeshData out;
    try {
        out.triangulation = Triangulation::build(std::move(faces), n);
    } catch (const Error& e) {
        detail::bad(source, std::string("invalid triangulation: ") + e.what());
    }
    if (doc.contains("edge_lengths")) {
        out.metric = detail::make_metric(
            out.triangulation,
            detail::lengths_from_json(doc.at("edge_lengths"), out.triangulation, source, "edge_lengths"), source);
        out.has_lengths = true;
    } else {
        out.metric = PLMetric::unit(out.triangulation);
    }
    return out;
}

/// OFF text: optional "OFF" header, "V F E" counts, V coordinate lines (ignored),
/// then F lines "3 i j k". '#' starts a comment.
inline Triangulation parse_off(std::string_view text, const std::string& source = "<off>")
{
    std::vector<std::pair<std::size_t, std::vector<std::string>>> lines;
    std::istringstream in{std::string(text)};
    std::string line;
    for (std::size_t no = 1; std::getline(in, line); ++no) {
        if (const auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        std::istringstream ls(line);
        std::vector<std::string> tokens;
        for (std::string tok; ls >> tok;)
            tokens.push_back(tok);
        if (!tokens.empty())
            lines.emplace_back(no, std::move(tokens));
    }
    std::size_t at = 0;
    if (at < lines.size() && lines[at].second.front() == "OFF") {
        lines[at].second.erase(lines[at].second.begin());
        if (lines[at].second.empty())
            ++at;
    }
    auto number = [&](const std::string& tok, std::size_t no) -> long long {
        try {
            std::size_t used = 0;
            const long long v = std::stoll(tok, &used);
            if (used != tok.size() || v < 0)
                throw std::invalid_argument(tok);
            return v;
        } catch (const std::logic_error&) {
            detail::bad(source, "line " + std::to_string(no) + ": expected a non-negative integer, got '" + tok + "'");
        }
    };
    if (at >= lines.size() || lines[at].second.size() < 2)
        detail::bad(source, "missing 'V F [E]' count line");
    const auto [count_line, counts] = lines[at];
    const auto nv = static_cast<Index>(number(counts[0], count_line));
    const auto nf = static_cast<std::size_t>(number(counts[1], count_line));
    ++at;
    if (lines.size() < at + nv + nf)
        detail::bad(source, "expected " + std::to_string(nv) + " vertex and " + std::to_string(nf)
                                + " face lines, file ends early");
    at += nv;
    std::vector<Face> faces;
    for (std::size_t f = 0; f < nf; ++f, ++at) {
        const auto& [no, tok] = lines[at];
        if (tok.size() != 4 || number(tok[0], no) != 3)
            detail::bad(source, "line " + std::to_string(no) + ": face must read '3 i j k'");
        faces.push_back({static_cast<Index>(number(tok[1], no)), static_cast<Index>(number(tok[2], no)),
                         static_cast<Index>(number(tok[3], no))});
    }
    if (at != lines.size())
        detail::bad(source, "line " + std::to_string(lines[at].first) + ": unexpected content after faces");
    try {
        return Triangulation::build(std::move(faces), nv);
    } catch (const Error& e) {
        detail::bad(source, std::string("invalid triangulation: ") + e.what());
    }
}

/// Lengths file for an OFF mesh: a JSON object {"i-j": len} or lines "i j len".
inline std::vector<double> parse_lengths(std::string_view text, const Triangulation& t,
                                         const std::string& source = "<lengths>")
{
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string_view::npos && text[first] == '{')
        return detail::lengths_from_json(detail::parse_json(text, source), t, source, "edge_lengths");

    std::vector<double> out(t.edge_count(), std::numeric_limits<double>::quiet_NaN());
    std::istringstream in{std::string(text)};
    std::string line;
    for (std::size_t no = 1; std::getline(in, line); ++no) {
        if (const auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        std::istringstream ls(line);
        long long i = -1, j = -1;
        double len = 0.0;
        std::string extra;
        if (!(ls >> i))
            continue;
        const std::string where = "line " + std::to_string(no) + ": ";
        if (!(ls >> j >> len) || (ls >> extra) || i < 0 || j < 0)
            detail::bad(source, where + "expected 'i j length'");
        const auto e = t.find_edge(static_cast<Index>(i), static_cast<Index>(j));
        if (!e)
            detail::bad(source, where + std::to_string(i) + "-" + std::to_string(j) + " is not an edge");
        if (!std::isnan(out[*e]))
            detail::bad(source, where + "edge given twice");
        out[*e] = len;
    }
    for (Index e = 0; e < out.size(); ++e)
        if (std::isnan(out[e]))
            detail::bad(source, "missing length for edge " + std::to_string(t.edge(e).a) + "-"
                                    + std::to_string(t.edge(e).b));
    return out;
}

/// Reads a mesh; `.off` files take lengths from `lengths_path` (unit lengths
/// when absent), anything else is parsed as mesh JSON.
inline MeshData read_mesh(const std::filesystem::path& path,
                          const std::optional<std::filesystem::path>& lengths_path = std::nullopt)
{
    const std::string text = read_text(path);
    MeshData out;
    if (path.extension() == ".off" || path.extension() == ".OFF") {
        out.triangulation = parse_off(text, path.string());
        out.metric = PLMetric::unit(out.triangulation);
    } else {
        out = parse_mesh_json(text, path.string());
    }
    if (lengths_path) {
        out.metric = detail::make_metric(
            out.triangulation, parse_lengths(read_text(*lengths_path), out.triangulation, lengths_path->string()),
            lengths_path->string());
        out.has_lengths = true;
    }
    return out;
}

inline std::string write_mesh_json(const Triangulation& t, const PLMetric& d)
{
    std::ostringstream os;
    os << "{\n  \"vertices\": " << t.vertex_count() << ",\n  \"faces\": [";
    for (Index f = 0; f < t.face_count(); ++f) {
        const Face& face = t.face(f);
        os << (f ? ", " : "") << "[" << face[0] << ", " << face[1] << ", " << face[2] << "]";
    }
    os << "],\n  \"edge_lengths\": {";
    for (Index e = 0; e < t.edge_count(); ++e)
        os << (e ? ",\n    " : "\n    ") << "\"" << t.edge(e).a << "-" << t.edge(e).b
           << "\": " << detail::format_double(d.length(e));
    os << "\n  }\n}\n";
    return os.str();
}

inline void save_mesh(const std::filesystem::path& path, const Triangulation& t, const PLMetric& d)
{
    write_text(path, write_mesh_json(t, d));
}

/// Header `t,w_0..w_{N-1},K_0..K_{N-1},G,F`, one row per sample.
inline void write_trace_csv(std::ostream& os, std::span<const TraceRow> rows, Index n)
{
    os << "t";
    for (Index i = 0; i < n; ++i)
        os << ",w_" << i;
    for (Index i = 0; i < n; ++i)
        os << ",K_" << i;
    os << ",G,F\n";
    os << std::setprecision(17);
    for (const auto& r : rows) {
        os << r.t;
        for (double x : r.w)
            os << ',' << x;
        for (double x : r.K)
            os << ',' << x;
        os << ',' << r.G << ',' << r.F << '\n';
    }
}

/// Path of segment k: the given path for k = 0, `<stem>.seg<k><ext>` after.
inline std::filesystem::path segment_path(const std::filesystem::path& path, std::size_t k)
{
    if (k == 0)
        return path;
    std::filesystem::path out = path;
    out.replace_filename(path.stem().string() + ".seg" + std::to_string(k) + path.extension().string());
    return out;
}

/// Writes every trace segment; returns the paths written.
inline std::vector<std::filesystem::path> emit_trace(const RunResult& run, const std::filesystem::path& path)
{
    std::vector<std::filesystem::path> written;
    for (std::size_t k = 0; k < run.segments.size(); ++k) {
        std::ostringstream os;
        write_trace_csv(os, run.segments[k].rows, run.segments[k].triangulation.vertex_count());
        written.push_back(segment_path(path, k));
        write_text(written.back(), os.str());
    }
    return written;
}

inline nlohmann::json event_json(const FlowEvent& ev)
{
    nlohmann::json j{{"event", to_string(ev.type)}, {"t", ev.t}, {"segment", ev.segment}};
    if (ev.type == FlowEvent::Type::Singularity || ev.type == FlowEvent::Type::Surgery) {
        const auto& r = ev.report;
        j["kind"] = to_string(r.kind);
        j["slack"] = r.slack;
        j["min_u"] = r.min_u;
        j["max_u"] = r.max_u;
        if (r.kind == SingularityKind::Essential) {
            j["vertex"] = r.vertex;
        } else {
            j["face"] = r.face;
            j["tight_edge"] = {r.tight_edge.a, r.tight_edge.b};
            j["collapsing_vertex"] = r.collapsing_vertex;
        }
    }
    if (ev.flip) {
        j["removed_edge"] = {ev.flip->removed_edge.a, ev.flip->removed_edge.b};
        j["inserted_edge"] = {ev.flip->inserted_edge.a, ev.flip->inserted_edge.b};
        j["new_length"] = ev.new_length;
    }
    return j;
}

/// One JSON object per line.
inline void emit_events(const RunResult& run, const std::filesystem::path& path)
{
    std::ostringstream os;
    for (const auto& ev : run.events)
        os << event_json(ev).dump() << '\n';
    write_text(path, os.str());
}

} // namespace yamabe::io
