#include "stmm/scheme_io.hpp"

#include <fstream>
#include <map>
#include <sstream>

namespace stmm {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

std::vector<int> parse_int_list(std::string_view body, char open, char close, int line) {
    if (body.size() < 2 || body.front() != open || body.back() != close)
        throw ParseError(line, "expected " + std::string{open} + "..." + std::string{close} + ", got '" +
                                   std::string(body) + "'");
    std::vector<int> out;
    std::stringstream ss{std::string(body.substr(1, body.size() - 2))};
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            const std::string t{trim(item)};
            out.push_back(std::stoi(t, &used));
            if (used != t.size())
                throw std::invalid_argument(t);
        } catch (const std::exception&) {
            throw ParseError(line, "bad integer '" + item + "'");
        }
    }
    return out;
}

void write_vector(std::ostream& os, const std::vector<mpq_class>& x) {
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (i)
            os << ' ';
        os << x[i].get_str();
    }
}

}  // namespace

std::string serialize(const ExactScheme& s) {
    std::ostringstream os;
    os << "shape=[" << s.n << ',' << s.n << ',' << s.n << "]\n";
    os << "format=" << s.format.code() << '\n';
    os << "field=" << field_name(s.field) << '\n';
    os << "rank=" << s.rank() << '\n';
    if (s.profile)
        os << "profile=(" << s.profile->q_ab << ',' << s.profile->q_ag << ',' << s.profile->q_gb << ")\n";
    os << "criterion=" << s.criterion << '\n';
    if (!s.source_field.empty())
        os << "lift=" << s.source_field << ':' << s.lift_steps << '\n';
    for (const ExactTerm& t : s.terms) {
        write_vector(os, t.u);
        os << " ; ";
        write_vector(os, t.v);
        os << " ; ";
        write_vector(os, t.w);
        os << '\n';
    }
    return os.str();
}

ExactScheme deserialize(std::string_view text) {
    ExactScheme s;
    std::map<std::string, std::pair<std::string, int>> header;
    std::vector<std::pair<std::string, int>> body;

    int line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos)
            end = text.size();
        const std::string_view line = trim(text.substr(pos, end - pos));
        pos = end + 1;
        ++line_no;
        if (line.empty() || line.front() == '#')
            continue;
        const auto eq = line.find('=');
        if (eq != std::string_view::npos && line.find(';') == std::string_view::npos) {
            if (!body.empty())
                throw ParseError(line_no, "header field after the first term");
            const std::string key{trim(line.substr(0, eq))};
            if (header.count(key))
                throw ParseError(line_no, "duplicate header field '" + key + "'");
            header[key] = {std::string(trim(line.substr(eq + 1))), line_no};
            continue;
        }
        body.emplace_back(std::string(line), line_no);
    }

    auto need = [&](const std::string& key) -> const std::pair<std::string, int>& {
        auto it = header.find(key);
        if (it == header.end())
            throw ParseError(line_no, "missing header field '" + key + "'");
        return it->second;
    };

    const auto& [shape_text, shape_line] = need("shape");
    const auto shape = parse_int_list(shape_text, '[', ']', shape_line);
    if (shape.size() != 3 || shape[0] != shape[1] || shape[1] != shape[2])
        throw ParseError(shape_line, "only square shapes [n,n,n] are supported");
    s.n = shape[0];

    const auto& [fmt_text, fmt_line] = need("format");
    try {
        s.format = parse_format(fmt_text);
        if (!s.format.canonical)
            throw std::invalid_argument("format '" + fmt_text + "' is not canonical");
        s.dims = tensor_dims(s.format, s.n);
        const auto& [field_text, field_line] = need("field");
        try {
            s.field = parse_field(field_text);
        } catch (const std::invalid_argument& e) {
            throw ParseError(field_line, e.what());
        }
    } catch (const std::invalid_argument& e) {
        throw ParseError(fmt_line, e.what());
    }

    const auto& [rank_text, rank_line] = need("rank");
    int rank = -1;
    try {
        rank = std::stoi(rank_text);
    } catch (const std::exception&) {
        throw ParseError(rank_line, "bad rank '" + rank_text + "'");
    }
    if (rank != static_cast<int>(body.size()))
        throw ParseError(rank_line, "rank=" + std::to_string(rank) + " but " + std::to_string(body.size()) +
                                        " terms follow");

    if (auto it = header.find("profile"); it != header.end()) {
        const auto q = parse_int_list(it->second.first, '(', ')', it->second.second);
        if (q.size() != 3)
            throw ParseError(it->second.second, "profile needs three counts");
        s.profile = RecursionCounts{q[0], q[1], q[2]};
    }
    if (auto it = header.find("criterion"); it != header.end()) {
        const std::string& c = it->second.first;
        if (c != "uv" && c != "wdiag" && c != "none")
            throw ParseError(it->second.second, "criterion must be uv, wdiag or none");
        s.criterion = c;
    }
    if (auto it = header.find("lift"); it != header.end()) {
        const std::string& v = it->second.first;
        const auto colon = v.find(':');
        try {
            if (colon == std::string::npos)
                throw std::invalid_argument(v);
            s.source_field = v.substr(0, colon);
            parse_field(s.source_field);
            s.lift_steps = std::stoi(v.substr(colon + 1));
        } catch (const std::exception&) {
            throw ParseError(it->second.second, "lift must look like F3:10");
        }
    }
    for (const auto& [key, val] : header)
        if (key != "shape" && key != "format" && key != "field" && key != "rank" && key != "profile" &&
            key != "criterion" && key != "lift")
            throw ParseError(val.second, "unknown header field '" + key + "'");

    const int p = field_characteristic(s.field);
    for (std::size_t q = 0; q < body.size(); ++q) {
        const auto& [line, ln] = body[q];
        const std::string where = "term " + std::to_string(q + 1) + ": ";
        std::vector<std::string> parts;
        std::stringstream ss(line);
        std::string part;
        while (std::getline(ss, part, ';'))
            parts.push_back(part);
        if (parts.size() != 3)
            throw ParseError(ln, where + "expected three factors separated by ';'");
        ExactTerm t;
        std::vector<mpq_class>* dst[3] = {&t.u, &t.v, &t.w};
        for (int axis = 0; axis < 3; ++axis) {
            std::istringstream items(parts[axis]);
            std::string tok;
            while (items >> tok) {
                mpq_class x;
                if (x.set_str(tok, 10) != 0 || tok.find('/') != tok.rfind('/'))
                    throw ParseError(ln, where + "bad coefficient '" + tok + "'");
                if (x.get_den() == 0)
                    throw ParseError(ln, where + "zero denominator in '" + tok + "'");
                x.canonicalize();
                if (p != 0 && (x.get_den() != 1 || x < 0 || x >= p))
                    throw ParseError(ln, where + "'" + tok + "' is not a residue mod " + std::to_string(p));
                if (s.field == Field::Z && x.get_den() != 1)
                    throw ParseError(ln, where + "'" + tok + "' is not an integer");
                dst[axis]->push_back(x);
            }
            if (static_cast<int>(dst[axis]->size()) != s.dims[axis])
                throw ParseError(ln, where + "factor " + "uvw"[axis] + " has " + std::to_string(dst[axis]->size()) +
                                         " entries, expected " + std::to_string(s.dims[axis]));
        }
        s.terms.push_back(std::move(t));
    }
    return s;
}

ExactScheme read_scheme_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return deserialize(buf.str());
    } catch (const ParseError& e) {
        throw ParseError(e.line(), e.detail(), path.string());
    }
}

void write_scheme_file(const std::filesystem::path& path, const ExactScheme& s) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out << serialize(s);
}

}  // namespace stmm
