#include "scgcomp/panel_io.hpp"

#include "scgcomp/errors.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_map>

namespace scgcomp {

namespace {

constexpr int kInvalidCode = -2;

std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '"'))
        s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split(std::string_view line)
{
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (true) {
        const auto comma = line.find(',', pos);
        out.push_back(trim(line.substr(pos, comma == std::string_view::npos ? line.npos : comma - pos)));
        if (comma == std::string_view::npos)
            break;
        pos = comma + 1;
    }
    return out;
}

bool is_missing_text(std::string_view s) { return s.empty() || s == "NA" || s == "."; }

double parse_real(std::string_view s, std::size_t line, std::string_view column)
{
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw ValidationError("line " + std::to_string(line) + ", column " + std::string(column)
                              + ": cannot parse '" + std::string(s) + "'");
    return v;
}

int parse_code(std::string_view s, std::size_t line, std::string_view column)
{
    const double v = parse_real(s, line, column);
    if (v != std::floor(v) || std::abs(v) > 1e6)
        return kInvalidCode;
    const int c = static_cast<int>(v);
    return c == kMissing ? kInvalidCode : c;
}

}  // namespace

std::string format_double(double v)
{
    if (std::isnan(v))
        return "";
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

PanelSchema parse_schema(std::string_view json_text)
{
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw UsageError(std::string("schema is not valid JSON: ") + e.what());
    }
    try {
        PanelSchema s;
        s.tau = j.at("tau").get<int>();
        if (s.tau < 1)
            throw UsageError("schema tau must be at least 1");
        s.baseline_state = j.value("baseline_state", false);
        for (const auto& c : j.value("covariates", nlohmann::json::array())) {
            CovariateInfo info;
            info.name = c.at("name").get<std::string>();
            if (info.name.empty() || info.name.find_first_of(",@*:") != std::string::npos)
                throw UsageError("invalid covariate name '" + info.name + "'");
            info.type = parse_covariate_type(c.value("type", std::string("binary")));
            info.baseline = c.value("baseline", true);
            info.time_varying = c.value("time_varying", false);
            info.levels = c.value("levels", std::vector<double>{});
            s.covariates.push_back(std::move(info));
        }
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw UsageError(std::string("malformed schema: ") + e.what());
    }
}

PanelSchema read_schema(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw UsageError("cannot open schema file '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_schema(ss.str());
}

std::string schema_json(const PanelSchema& schema)
{
    nlohmann::ordered_json j;
    j["tau"] = schema.tau;
    j["baseline_state"] = schema.baseline_state;
    j["covariates"] = nlohmann::ordered_json::array();
    for (const auto& c : schema.covariates) {
        nlohmann::ordered_json cj;
        cj["name"] = c.name;
        cj["type"] = std::string(to_string(c.type));
        cj["baseline"] = c.baseline;
        cj["time_varying"] = c.time_varying;
        if (!c.levels.empty())
            cj["levels"] = c.levels;
        j["covariates"].push_back(std::move(cj));
    }
    return j.dump(2);
}

PanelSchema schema_of(const PanelDataset& data)
{
    return PanelSchema{data.tau(), data.covariates(), data.columns().has_baseline_state};
}

std::vector<std::string> panel_column_names(const PanelSchema& schema)
{
    std::vector<std::string> names{"id"};
    if (schema.baseline_state)
        names.emplace_back("Y0");
    for (const auto& c : schema.covariates) {
        if (c.baseline)
            names.push_back("L0_" + c.name);
    }
    names.emplace_back("A0");
    for (int k = 1; k <= schema.tau; ++k) {
        names.push_back("C" + std::to_string(k));
        names.push_back("Y" + std::to_string(k));
        if (k < schema.tau) {
            for (const auto& c : schema.covariates) {
                if (c.time_varying)
                    names.push_back("L" + std::to_string(k) + "_" + c.name);
            }
            names.push_back("A" + std::to_string(k));
        }
    }
    return names;
}

PanelDataset read_panel_csv(std::istream& in, const PanelSchema& schema)
{
    std::string line;
    std::size_t line_no = 0;
    do {
        if (!std::getline(in, line))
            throw ValidationError("data file is empty");
        ++line_no;
    } while (line.starts_with('#'));
    const auto header = split(line);
    const auto expected = panel_column_names(schema);
    std::unordered_map<std::string, std::size_t> position;
    for (std::size_t c = 0; c < header.size(); ++c) {
        const std::string name(header[c]);
        if (!position.emplace(name, c).second)
            throw ValidationError("duplicate column '" + name + "'");
    }
    std::vector<std::size_t> where;
    for (const auto& name : expected) {
        const auto it = position.find(name);
        if (it == position.end())
            throw ValidationError("missing column '" + name + "'");
        where.push_back(it->second);
    }
    if (header.size() != expected.size()) {
        for (const auto& h : header) {
            if (std::find(expected.begin(), expected.end(), std::string(h)) == expected.end())
                throw ValidationError("unexpected column '" + std::string(h) + "'");
        }
    }

    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> row_lines;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty())
            continue;
        const auto cells = split(line);
        if (cells.size() != header.size())
            throw ValidationError("line " + std::to_string(line_no) + " has " + std::to_string(cells.size())
                                  + " fields, expected " + std::to_string(header.size()));
        std::vector<std::string> row;
        row.reserve(expected.size());
        for (std::size_t c : where)
            row.emplace_back(cells[c]);
        rows.push_back(std::move(row));
        row_lines.push_back(line_no);
    }

    auto cols = PanelColumns::empty(static_cast<Eigen::Index>(rows.size()), schema.tau, schema.covariates,
                                    schema.baseline_state);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto i = static_cast<Eigen::Index>(r);
        const std::size_t ln = row_lines[r];
        std::size_t c = 0;
        auto next = [&]() -> std::pair<std::string_view, std::string_view> {
            const std::size_t at = c++;
            return {rows[r][at], expected[at]};
        };
        auto read_code = [&](int& dst) {
            const auto [text, col] = next();
            dst = is_missing_text(text) ? kMissing : parse_code(text, ln, col);
        };
        auto read_real = [&](double& dst) {
            const auto [text, col] = next();
            dst = is_missing_text(text) ? std::numeric_limits<double>::quiet_NaN() : parse_real(text, ln, col);
        };
        cols.ids[r] = std::string(next().first);
        if (schema.baseline_state)
            read_code(cols.state(i, 0));
        for (std::size_t j = 0; j < schema.covariates.size(); ++j) {
            if (schema.covariates[j].baseline)
                read_real(cols.covariate[j](i, 0));
        }
        read_code(cols.action(i, 0));
        for (int k = 1; k <= schema.tau; ++k) {
            read_code(cols.censored(i, k));
            read_code(cols.state(i, k));
            if (k < schema.tau) {
                for (std::size_t j = 0; j < schema.covariates.size(); ++j) {
                    if (schema.covariates[j].time_varying)
                        read_real(cols.covariate[j](i, k));
                }
                read_code(cols.action(i, k));
            }
        }
    }
    return PanelDataset(std::move(cols));
}

PanelDataset read_panel_csv(const std::filesystem::path& path, const PanelSchema& schema)
{
    std::ifstream in(path);
    if (!in)
        throw UsageError("cannot open data file '" + path.string() + "'");
    return read_panel_csv(in, schema);
}

void write_panel_csv(std::ostream& out, const PanelDataset& data)
{
    const PanelSchema schema = schema_of(data);
    const auto names = panel_column_names(schema);
    for (std::size_t c = 0; c < names.size(); ++c)
        out << (c ? "," : "") << names[c];
    out << '\n';
    auto code_text = [](int v) { return v == kMissing ? std::string() : std::to_string(v); };
    const auto& covs = data.covariates();
    for (Eigen::Index i = 0; i < data.n(); ++i) {
        out << data.ids()[static_cast<std::size_t>(i)];
        if (schema.baseline_state)
            out << ',' << code_text(data.state(i, 0));
        for (std::size_t j = 0; j < covs.size(); ++j) {
            if (covs[j].baseline)
                out << ',' << format_double(data.covariate(static_cast<int>(j), i, 0));
        }
        out << ',' << code_text(data.action(i, 0));
        for (int k = 1; k <= data.tau(); ++k) {
            out << ',' << code_text(data.censored(i, k)) << ',' << code_text(data.state(i, k));
            if (k < data.tau()) {
                for (std::size_t j = 0; j < covs.size(); ++j) {
                    if (covs[j].time_varying)
                        out << ',' << format_double(data.covariate(static_cast<int>(j), i, k));
                }
                out << ',' << code_text(data.action(i, k));
            }
        }
        out << '\n';
    }
}

}  // namespace scgcomp
