#include "polca/model_io.hpp"

#include <fstream>
#include <map>
#include <tuple>

#include "polca/errors.hpp"

namespace polca {

using nlohmann::json;

namespace {

std::size_t as_index(const json& j, const char* what)
{
    if (!j.is_number_integer() || j.get<long long>() < 0)
        throw InvalidInput(std::string("expected a nonnegative integer for ") + what);
    return j.get<std::size_t>();
}

std::size_t resolve_state(const FeatureSpace& space, const json& j)
{
    if (j.is_number_integer()) {
        auto s = as_index(j, "state");
        if (s >= space.num_states())
            throw InvalidInput("state index " + std::to_string(s) + " out of range");
        return s;
    }
    if (!j.is_object())
        throw InvalidInput("state must be an index or a feature-assignment object");
    std::vector<std::size_t> assignment(space.num_features(), 0);
    std::vector<bool> seen(space.num_features(), false);
    for (auto it = j.begin(); it != j.end(); ++it) {
        auto f = space.feature_index(it.key());
        std::optional<std::size_t> v;
        if (it.value().is_number_integer())
            v = as_index(it.value(), "feature value");
        else if (it.value().is_string())
            v = space.find_value(f, it.value().get<std::string>());
        if (!v || *v >= space.feature(f).cardinality)
            throw InvalidInput("bad value for feature '" + it.key() + "'");
        assignment[f] = *v;
        seen[f] = true;
    }
    for (std::size_t f = 0; f < seen.size(); ++f)
        if (!seen[f])
            throw InvalidInput("state assignment omits feature '" + space.feature(f).name + "'");
    return space.encode(assignment);
}

std::size_t resolve_name(const std::vector<std::string>& names, const json& j, const char* what)
{
    if (j.is_number_integer()) {
        auto i = as_index(j, what);
        if (i >= names.size())
            throw InvalidInput(std::string(what) + " index " + std::to_string(i) + " out of range");
        return i;
    }
    if (j.is_string()) {
        auto name = j.get<std::string>();
        for (std::size_t i = 0; i < names.size(); ++i)
            if (names[i] == name)
                return i;
        throw InvalidInput(std::string("unknown ") + what + " '" + name + "'");
    }
    throw InvalidInput(std::string("expected a name or index for ") + what);
}

double as_number(const json& j, const char* what)
{
    if (!j.is_number())
        throw InvalidInput(std::string("expected a number for ") + what);
    return j.get<double>();
}

} // namespace

DecisionModel model_from_json(const json& doc)
{
    if (!doc.is_object())
        throw InvalidInput("model document must be a JSON object");
    DecisionModel m;

    std::vector<Feature> features;
    for (const auto& f : doc.at("features")) {
        Feature feat;
        feat.name = f.at("name").get<std::string>();
        feat.cardinality = as_index(f.at("cardinality"), "cardinality");
        if (f.contains("values"))
            feat.labels = f.at("values").get<std::vector<std::string>>();
        features.push_back(std::move(feat));
    }
    m.space = FeatureSpace(std::move(features));
    if (auto problems = m.space.problems(); !problems.empty())
        throw InvalidInput("feature space: " + problems.front());

    m.actions = doc.at("actions").get<std::vector<std::string>>();
    m.discount = doc.contains("discount") ? as_number(doc.at("discount"), "discount") : 0.95;
    if (doc.contains("observations"))
        m.observations = doc.at("observations").get<std::vector<std::string>>();

    const auto n = m.num_states();
    const auto n_actions = m.num_actions();

    std::vector<std::vector<std::vector<Transition>>> rows(n_actions, std::vector<std::vector<Transition>>(n));
    const auto& tdoc = doc.at("transitions");
    if (tdoc.is_array()) {
        std::map<std::tuple<std::size_t, std::size_t, std::size_t>, bool> seen;
        for (const auto& e : tdoc) {
            if (!e.is_array() || e.size() != 4)
                throw InvalidInput("transition entries must be [s, a, s', p]");
            auto s = resolve_state(m.space, e[0]);
            auto a = resolve_name(m.actions, e[1], "action");
            auto sp = resolve_state(m.space, e[2]);
            if (!seen.emplace(std::make_tuple(s, a, sp), true).second)
                throw InvalidInput("duplicate transition entry");
            rows[a][s].push_back({sp, as_number(e[3], "probability")});
        }
    } else if (tdoc.is_object()) {
        for (auto it = tdoc.begin(); it != tdoc.end(); ++it) {
            auto a = resolve_name(m.actions, json(it.key()), "action");
            const auto& mat = it.value();
            if (!mat.is_array() || mat.size() != n)
                throw InvalidInput("dense transition matrix for '" + it.key() + "' must have one row per state");
            for (StateId s = 0; s < n; ++s) {
                if (!mat[s].is_array() || mat[s].size() != n)
                    throw InvalidInput("dense transition row has wrong length");
                for (StateId sp = 0; sp < n; ++sp) {
                    double p = as_number(mat[s][sp], "probability");
                    if (p != 0.0)
                        rows[a][s].push_back({sp, p});
                }
            }
        }
    } else {
        throw InvalidInput("transitions must be an array of quadruples or an object of matrices");
    }
    for (auto& r : rows)
        m.transitions.emplace_back(std::move(r));

    m.rewards.assign(n_actions, std::vector<double>(n, 0.0));
    if (doc.contains("rewards")) {
        for (const auto& e : doc.at("rewards")) {
            if (!e.is_array() || e.size() != 3)
                throw InvalidInput("reward entries must be [s, a, r]");
            auto s = resolve_state(m.space, e[0]);
            auto a = resolve_name(m.actions, e[1], "action");
            m.rewards[a][s] = as_number(e[2], "reward");
        }
    }

    if (!m.observations.empty()) {
        const auto n_obs = m.num_observations();
        m.observation_probs.assign(n_actions, std::vector<double>(n * n_obs, 0.0));
        for (const auto& e : doc.at("obs_model")) {
            if (!e.is_array() || e.size() != 4)
                throw InvalidInput("observation entries must be [a, s', o, p]");
            auto a = resolve_name(m.actions, e[0], "action");
            auto sp = resolve_state(m.space, e[1]);
            auto o = resolve_name(m.observations, e[2], "observation");
            m.observation_probs[a][sp * n_obs + o] = as_number(e[3], "probability");
        }
    } else if (doc.contains("obs_model")) {
        throw InvalidInput("obs_model given without observations");
    }
    return m;
}

json model_to_json(const DecisionModel& m)
{
    if (!m.observation_source.empty())
        throw InvalidInput("models with origin-dependent observation tables have no file form");
    json doc;
    json features = json::array();
    for (const auto& f : m.space.features()) {
        json jf{{"name", f.name}, {"cardinality", f.cardinality}};
        if (!f.labels.empty())
            jf["values"] = f.labels;
        features.push_back(std::move(jf));
    }
    doc["features"] = std::move(features);
    doc["actions"] = m.actions;
    doc["discount"] = m.discount;

    json transitions = json::array();
    json rewards = json::array();
    for (StateId s = 0; s < m.num_states(); ++s) {
        for (ActionId a = 0; a < m.num_actions(); ++a) {
            for (const auto& e : m.transitions[a].row(s))
                if (e.prob != 0.0)
                    transitions.push_back(json::array({s, a, e.to, e.prob}));
            if (m.rewards[a][s] != 0.0)
                rewards.push_back(json::array({s, a, m.rewards[a][s]}));
        }
    }
    doc["transitions"] = std::move(transitions);
    doc["rewards"] = std::move(rewards);

    if (m.kind() == ModelKind::Pomdp) {
        doc["observations"] = m.observations;
        json obs = json::array();
        for (ActionId a = 0; a < m.num_actions(); ++a)
            for (StateId sp = 0; sp < m.num_states(); ++sp)
                for (ObsId o = 0; o < m.num_observations(); ++o)
                    if (double p = m.observation(a, sp, o); p != 0.0)
                        obs.push_back(json::array({a, sp, o, p}));
        doc["obs_model"] = std::move(obs);
    }
    return doc;
}

json read_json_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw InvalidInput("cannot open '" + path.string() + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw InvalidInput("'" + path.string() + "': " + e.what());
    }
}

void write_json_file(const json& doc, const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write '" + path.string() + "'");
    out << doc.dump(1) << '\n';
}

DecisionModel load_model(const std::filesystem::path& path)
{
    try {
        return model_from_json(read_json_file(path));
    } catch (const json::exception& e) {
        throw InvalidInput("'" + path.string() + "': " + e.what());
    }
}

void save_model(const DecisionModel& model, const std::filesystem::path& path)
{
    write_json_file(model_to_json(model), path);
}

} // namespace polca
