#include "scgcomp/spec_io.hpp"

#include "scgcomp/errors.hpp"

#include <json.hpp>

#include <charconv>
#include <fstream>
#include <sstream>

namespace scgcomp {

using nlohmann::json;

namespace {

int parse_lag(std::string_view text, std::string_view whole)
{
    int lag = -1;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), lag);
    if (ec != std::errc{} || ptr != text.data() + text.size() || lag < 0)
        throw UsageError("invalid lag in source '" + std::string(whole) + "'");
    return lag;
}

std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t'))
        s.remove_suffix(1);
    return s;
}

Transform parse_transform(const json& j)
{
    const auto kind = j.value("transform", std::string("identity"));
    if (kind == "identity")
        return Transform::identity();
    if (kind == "indicators") {
        std::optional<double> omitted;
        if (j.contains("omitted"))
            omitted = j.at("omitted").get<double>();
        return Transform::indicators(omitted, j.value("levels", std::vector<double>{}));
    }
    if (kind == "rqs")
        return Transform::rq_spline(j.value("knots", std::vector<double>{}));
    throw UsageError("unknown transform '" + kind + "'");
}

TermSpec parse_term(const json& j)
{
    if (j.is_string())
        return TermSpec{parse_factors(j.get<std::string>()), Transform::identity()};
    if (!j.is_object() || !j.contains("term"))
        throw UsageError("a term is a string or an object with a \"term\" field");
    TermSpec t{parse_factors(j.at("term").get<std::string>()), parse_transform(j)};
    if (t.transform.kind != TransformKind::Identity && t.factors.size() != 1)
        throw UsageError("transforms apply to single-source terms only");
    return t;
}

ModelSpec parse_model(const json& j)
{
    if (!j.is_object() || !j.contains("terms") || !j.at("terms").is_array())
        throw UsageError("a model needs a \"terms\" array");
    ModelSpec spec;
    for (const auto& t : j.at("terms"))
        spec.terms.push_back(parse_term(t));
    return spec;
}

SpecTemplate parse_template(const json& j)
{
    if (j.is_string()) {
        if (j.get<std::string>() != "saturated")
            throw UsageError("unknown model '" + j.get<std::string>() + "'");
        return SpecTemplate::saturated();
    }
    if (!j.is_object())
        throw UsageError("a model must be a JSON object or \"saturated\"");
    SpecTemplate out;
    if (j.contains("saturated")) {
        std::vector<Source> sources;
        for (const auto& s : j.at("saturated"))
            sources.push_back(parse_source(s.get<std::string>()));
        out.saturate = std::move(sources);
    } else if (j.contains("terms")) {
        out.base = parse_model(j);
    }
    if (j.contains("at_time")) {
        for (const auto& [key, value] : j.at("at_time").items())
            out.at_time.emplace(parse_lag(key, key), parse_model(value));
    }
    return out;
}

json term_json(const TermSpec& t)
{
    json j;
    j["term"] = t.label();
    switch (t.transform.kind) {
    case TransformKind::Identity:
        return t.label();
    case TransformKind::DisjointIndicators:
        j["transform"] = "indicators";
        if (t.transform.omitted)
            j["omitted"] = *t.transform.omitted;
        if (!t.transform.levels.empty())
            j["levels"] = t.transform.levels;
        break;
    case TransformKind::RQSpline:
        j["transform"] = "rqs";
        if (!t.transform.knots.empty())
            j["knots"] = t.transform.knots;
        break;
    }
    return j;
}

json model_json(const ModelSpec& m)
{
    json terms = json::array();
    for (const auto& t : m.terms)
        terms.push_back(term_json(t));
    return json{{"terms", terms}};
}

json template_json(const SpecTemplate& s)
{
    json j;
    if (s.saturate) {
        if (s.saturate->empty() && s.at_time.empty())
            return "saturated";
        json src = json::array();
        for (const auto& x : *s.saturate)
            src.push_back(x.label());
        j["saturated"] = src;
    } else {
        j = model_json(s.base);
    }
    if (!s.at_time.empty()) {
        json at = json::object();
        for (const auto& [t, m] : s.at_time)
            at[std::to_string(t)] = model_json(m);
        j["at_time"] = at;
    }
    return j;
}

}  // namespace

Source parse_source(std::string_view text)
{
    const std::string_view s = trim(text);
    const std::string whole(s);
    if (s == "A0")
        return Source::baseline_action();
    if (s.starts_with("B:")) {
        if (s.size() == 2)
            throw UsageError("missing covariate name in source '" + whole + "'");
        return Source::baseline(std::string(s.substr(2)));
    }
    const auto at = s.rfind('@');
    if (at == std::string_view::npos)
        throw UsageError("unrecognized source '" + whole + "'");
    const std::string_view head = s.substr(0, at);
    const int lag = parse_lag(s.substr(at + 1), s);
    if (head == "A")
        return Source::action(lag);
    if (head == "Y")
        return Source::prior_state(lag);
    if (head == "Y2")
        return Source::prior_state_indicator(lag);
    if (head.starts_with("L:") && head.size() > 2)
        return Source::covariate(std::string(head.substr(2)), lag);
    throw UsageError("unrecognized source '" + whole + "'");
}

std::vector<Source> parse_factors(std::string_view text)
{
    std::vector<Source> out;
    std::size_t start = 0;
    while (true) {
        const auto star = text.find('*', start);
        out.push_back(parse_source(text.substr(start, star == std::string_view::npos ? star : star - start)));
        if (star == std::string_view::npos)
            break;
        start = star + 1;
    }
    return out;
}

SpecFile parse_spec_file(std::string_view json_text)
{
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw UsageError(std::string("spec file is not valid JSON: ") + e.what());
    }
    if (!j.is_object())
        throw UsageError("spec file must hold a JSON object");
    SpecFile out;
    try {
        for (const auto& [key, value] : j.items()) {
            if (key == "outcome")
                out.outcome = parse_template(value);
            else if (key == "pseudo")
                out.pseudo = parse_template(value);
            else if (key == "covariates") {
                for (const auto& [name, tmpl] : value.items())
                    out.covariates.emplace(name, parse_template(tmpl));
            } else
                throw UsageError("unknown spec file field '" + key + "'");
        }
    } catch (const json::exception& e) {
        throw UsageError(std::string("malformed spec file: ") + e.what());
    }
    return out;
}

SpecFile read_spec_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw UsageError("cannot open spec file '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_spec_file(ss.str());
}

std::string spec_file_json(const SpecFile& spec)
{
    json j = json::object();
    if (spec.outcome)
        j["outcome"] = template_json(*spec.outcome);
    if (spec.pseudo)
        j["pseudo"] = template_json(*spec.pseudo);
    if (!spec.covariates.empty()) {
        json c = json::object();
        for (const auto& [name, t] : spec.covariates)
            c[name] = template_json(t);
        j["covariates"] = c;
    }
    return j.dump();
}

SpecTemplate main_effects_outcome(const PanelColumns& data)
{
    SpecTemplate out;
    for (int t_c = 0; t_c < data.tau; ++t_c) {
        ModelSpec m;
        for (const auto& s : history_sources(data, t_c))
            m.terms.push_back(TermSpec::of(s));
        out.at_time.emplace(t_c, std::move(m));
    }
    return out;
}

namespace {

std::vector<Source> covariate_history(const PanelColumns& data, int covariate, int t_c)
{
    std::vector<Source> out;
    for (const auto& s : history_sources(data, t_c, false)) {
        if (s.kind == SourceKind::Covariate && s.lag == 0) {
            const int j = data.covariate_index(s.name);
            if (j < 0 || j >= covariate)
                continue;
        }
        out.push_back(s);
    }
    return out;
}

}  // namespace

SpecTemplate main_effects_covariate(const PanelColumns& data, int covariate)
{
    SpecTemplate out;
    for (int t_c = 1; t_c < data.tau; ++t_c) {
        ModelSpec m;
        for (const auto& s : covariate_history(data, covariate, t_c))
            m.terms.push_back(TermSpec::of(s));
        out.at_time.emplace(t_c, std::move(m));
    }
    return out;
}

SpecTemplate saturated_covariate(const PanelColumns& data, int covariate)
{
    SpecTemplate out;
    for (int t_c = 1; t_c < data.tau; ++t_c)
        out.at_time.emplace(t_c, saturated_spec(covariate_history(data, covariate, t_c)));
    return out;
}

IceSpecs ice_specs_from(const SpecFile& file, const PanelColumns& data)
{
    IceSpecs s;
    s.outcome = file.outcome ? *file.outcome : main_effects_outcome(data);
    s.pseudo = file.pseudo ? *file.pseudo : s.outcome;
    return s.resolved(data);
}

StandardSpecs standard_specs_from(const SpecFile& file, const PanelColumns& data)
{
    StandardSpecs s;
    s.outcome = file.outcome ? *file.outcome : main_effects_outcome(data);
    for (std::size_t j = 0; j < data.covariates.size(); ++j) {
        const auto& info = data.covariates[j];
        if (!info.time_varying)
            continue;
        const auto it = file.covariates.find(info.name);
        const int idx = static_cast<int>(j);
        if (it == file.covariates.end())
            s.covariate.emplace(info.name, main_effects_covariate(data, idx));
        else if (it->second.saturate && it->second.saturate->empty())
            s.covariate.emplace(info.name, saturated_covariate(data, idx));
        else
            s.covariate.emplace(info.name, it->second);
    }
    return s.resolved(data);
}

}  // namespace scgcomp
