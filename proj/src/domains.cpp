#include "polca/domains.hpp"

#include <array>
#include <functional>
#include <map>

#include "polca/errors.hpp"

namespace polca {

namespace {

using Assignment = std::vector<std::size_t>;
using Outcomes = std::vector<std::pair<Assignment, double>>;

// Fills T, R and (when observe is set) O from per-assignment callbacks.
struct ModelSpec {
    FeatureSpace space;
    std::vector<std::string> actions;
    std::vector<std::string> observations;
    double discount = 0.95;
    std::function<Outcomes(const Assignment&, ActionId)> step;
    std::function<double(const Assignment&, ActionId)> reward;
    std::function<std::vector<double>(ActionId, const Assignment&)> observe;
};

DecisionModel build_model(const ModelSpec& spec)
{
    DecisionModel m;
    m.space = spec.space;
    m.actions = spec.actions;
    m.discount = spec.discount;
    m.observations = spec.observations;
    const auto n = spec.space.num_states();
    std::vector<Assignment> decoded(n);
    for (StateId s = 0; s < n; ++s)
        decoded[s] = spec.space.decode(s);
    for (ActionId a = 0; a < spec.actions.size(); ++a) {
        std::vector<std::vector<Transition>> rows(n);
        std::vector<double> r(n);
        for (StateId s = 0; s < n; ++s) {
            for (const auto& [next, p] : spec.step(decoded[s], a))
                if (p > 0.0)
                    rows[s].push_back({spec.space.encode(next), p});
            r[s] = spec.reward(decoded[s], a);
        }
        m.transitions.emplace_back(std::move(rows));
        m.rewards.push_back(std::move(r));
        if (spec.observe) {
            std::vector<double> table;
            table.reserve(n * spec.observations.size());
            for (StateId s = 0; s < n; ++s) {
                auto row = spec.observe(a, decoded[s]);
                table.insert(table.end(), row.begin(), row.end());
            }
            m.observation_probs.push_back(std::move(table));
        }
    }
    auto problems = validate_model(m);
    if (!problems.empty())
        throw std::logic_error("built-in domain is invalid: " + problems.front().message);
    return m;
}

Condition::Clause clause(std::string feature, std::vector<ValueRef> values)
{
    return {std::move(feature), std::move(values)};
}

Condition all_of(std::vector<Condition::Clause> clauses)
{
    Condition c;
    c.clauses = std::move(clauses);
    return c;
}

// ---------------------------------------------------------------- taxi

constexpr std::size_t kGrid = 5;
constexpr std::array<std::pair<std::size_t, std::size_t>, 4> kLandmarks{{{0, 0}, {4, 0}, {0, 4}, {3, 4}}};
constexpr std::array<const char*, 4> kLandmarkNames{"R", "G", "Y", "B"};
enum TaxiAction : ActionId { North, South, East, West, Pickup, Putdown };

// Wall on the east side of (x, y).
bool wall_east(std::size_t x, std::size_t y)
{
    static constexpr std::array<std::pair<std::size_t, std::size_t>, 6> walls{
        {{1, 0}, {1, 1}, {0, 3}, {2, 3}, {0, 4}, {2, 4}}};
    for (const auto& [wx, wy] : walls)
        if (wx == x && wy == y)
            return true;
    return false;
}

std::pair<std::size_t, std::size_t> move_taxi(std::size_t x, std::size_t y, ActionId a)
{
    switch (a) {
    case North:
        return {x, y > 0 ? y - 1 : y};
    case South:
        return {x, y + 1 < kGrid ? y + 1 : y};
    case East:
        return {x + 1 < kGrid && !wall_east(x, y) ? x + 1 : x, y};
    case West:
        return {x > 0 && !wall_east(x - 1, y) ? x - 1 : x, y};
    default:
        return {x, y};
    }
}

// Passenger values: cells 0..cells-1, then "taxi". Landmark L sits at
// landmark_cell[L].
struct TaxiLayout {
    std::vector<std::size_t> cell_x, cell_y;  // per passenger cell value
    std::array<std::size_t, 4> landmark_cell{};
    std::size_t in_taxi() const { return cell_x.size(); }
};

Domain build_taxi_like(const TaxiOptions& o, bool any_cell, std::string name)
{
    TaxiLayout layout;
    std::vector<std::string> passenger_labels;
    if (any_cell) {
        for (std::size_t y = 0; y < kGrid; ++y)
            for (std::size_t x = 0; x < kGrid; ++x) {
                layout.cell_x.push_back(x);
                layout.cell_y.push_back(y);
                passenger_labels.push_back("c" + std::to_string(x) + std::to_string(y));
            }
        for (std::size_t l = 0; l < 4; ++l)
            layout.landmark_cell[l] = kLandmarks[l].second * kGrid + kLandmarks[l].first;
    } else {
        for (std::size_t l = 0; l < 4; ++l) {
            layout.cell_x.push_back(kLandmarks[l].first);
            layout.cell_y.push_back(kLandmarks[l].second);
            passenger_labels.emplace_back(kLandmarkNames[l]);
            layout.landmark_cell[l] = l;
        }
    }
    passenger_labels.emplace_back("taxi");

    FeatureSpace space({{"x", kGrid, {}},
                        {"y", kGrid, {}},
                        {"passenger", passenger_labels.size(), passenger_labels},
                        {"destination", 4, {"R", "G", "Y", "B"}}});
    const auto delivered = [&](const Assignment& v) {
        return v[2] != layout.in_taxi() && v[2] == layout.landmark_cell[v[3]];
    };

    ModelSpec spec;
    spec.space = space;
    spec.actions = {"North", "South", "East", "West", "Pickup", "Putdown"};
    spec.discount = o.discount;
    spec.step = [&](const Assignment& v, ActionId a) -> Outcomes {
        Assignment next = v;
        if (delivered(v))
            return {{next, 1.0}};
        if (a <= West) {
            auto [x, y] = move_taxi(v[0], v[1], a);
            next[0] = x;
            next[1] = y;
        } else if (a == Pickup) {
            if (v[2] != layout.in_taxi() && layout.cell_x[v[2]] == v[0] && layout.cell_y[v[2]] == v[1])
                next[2] = layout.in_taxi();
        } else {
            const auto dest = layout.landmark_cell[v[3]];
            if (v[2] == layout.in_taxi() && layout.cell_x[dest] == v[0] && layout.cell_y[dest] == v[1])
                next[2] = dest;
        }
        return {{next, 1.0}};
    };
    spec.reward = [&](const Assignment& v, ActionId a) -> double {
        if (delivered(v))
            return 0.0;
        if (a <= West)
            return o.step_reward;
        if (a == Pickup) {
            const bool legal =
                v[2] != layout.in_taxi() && layout.cell_x[v[2]] == v[0] && layout.cell_y[v[2]] == v[1];
            return legal ? o.step_reward : o.illegal_reward;
        }
        const auto dest = layout.landmark_cell[v[3]];
        const bool legal = v[2] == layout.in_taxi() && layout.cell_x[dest] == v[0] && layout.cell_y[dest] == v[1];
        return legal ? o.delivery_reward : o.illegal_reward;
    };

    Domain d;
    d.name = std::move(name);
    d.model = build_model(spec);

    // Delivered: passenger sits on the destination landmark.
    Condition done;
    for (std::size_t l = 0; l < 4; ++l)
        done.any_of.push_back(all_of({clause("passenger", {passenger_labels[layout.landmark_cell[l]]}),
                                      clause("destination", {std::string(kLandmarkNames[l])})}));

    // Navigation goal: taxi on the cell named by `feature` (the passenger's
    // cell or the destination landmark).
    const auto reached = [&](const std::string& feature, bool landmarks_only) {
        Condition c;
        const std::size_t cells = landmarks_only ? 4 : layout.in_taxi();
        for (std::size_t v = 0; v < cells; ++v) {
            const auto cell = landmarks_only ? layout.landmark_cell[v] : v;
            const std::string label = landmarks_only ? kLandmarkNames[v] : passenger_labels[v];
            c.any_of.push_back(all_of({clause("x", {layout.cell_x[cell]}), clause("y", {layout.cell_y[cell]}),
                                       clause(feature, {label})}));
        }
        return c;
    };

    TaskGraph g;
    g.root = "root";
    const Condition at_source = reached("passenger", false);
    const Condition at_dest = reached("destination", true);
    g.nodes.push_back({"nav_source", {"North", "South", "East", "West"}, {{at_source, std::nullopt, 1.0}}, at_source, {}});
    g.nodes.push_back({"nav_dest", {"North", "South", "East", "West"}, {{at_dest, std::nullopt, 1.0}}, at_dest, {}});
    Condition carrying_or_done = done;
    carrying_or_done.any_of.push_back(all_of({clause("passenger", {std::string("taxi")})}));
    g.nodes.push_back({"get", {"nav_source", "Pickup"}, {}, carrying_or_done, {}});
    g.nodes.push_back({"put", {"nav_dest", "Putdown"}, {}, done, {}});
    g.nodes.push_back({"root", {"get", "put"}, {}, done, {}});
    d.hierarchy = std::move(g);
    d.initial = Belief::uniform(d.model.num_states());
    return d;
}

// ------------------------------------------------------------ nursebot

namespace nb {

enum Feat : std::size_t { Robot, Person, Attention, Battery, Motion, Reminder, Request };
enum Loc : std::size_t { Room, Physio, Home };
enum PersonLoc : std::size_t { PRoom, PPhysio, PHallway };
enum Att : std::size_t { Attentive, Distracted };
enum Bat : std::size_t { High, Low };
enum Goal : std::size_t { None, Pending };
enum Req : std::size_t { NoRequest, Weather, Time, Schedule };

constexpr std::array<const char*, 4> kRequestWords{"", "weather", "time", "schedule"};

enum Obs : ObsId {
    Null,
    Noise,
    Yes,
    No,
    WordWeather,
    WordTime,
    WordSchedule,
    WordPhysio,
    PhysioMessage,
    AtRoom,
    AtPhysio,
    AtHome,
    User,
    NoUser,
    BatteryHigh,
    BatteryLow,
    ObsCount
};

const std::vector<std::string> kObservationNames{
    "null", "noise", "yes", "no", "weather", "time", "schedule", "physio", "physio-message",
    "RobotAtPatientRoom", "RobotAtPhysio", "RobotAtHome", "user", "no-user", "battery-high", "battery-low"};

enum class Kind {
    DoNothing,
    GotoRoom,
    RingBell,
    Remind,
    ConfirmGuide,
    Guide,
    CheckUser,
    Terminate,
    CheckBattery,
    GoHome,
    Recharge,
    Verify,
    ConfirmDone,
    ConfirmWant,
    Tell,
};

struct ActionDef {
    std::string name;
    Kind kind;
    std::size_t topic = 0;  // request value for ConfirmWant and Tell
};

bool is_speech(Kind k)
{
    switch (k) {
    case Kind::RingBell:
    case Kind::Remind:
    case Kind::ConfirmGuide:
    case Kind::Verify:
    case Kind::ConfirmDone:
    case Kind::ConfirmWant:
    case Kind::Tell:
        return true;
    default:
        return false;
    }
}

class Builder {
public:
    Builder(NursebotScale scale, const NursebotOptions& o) : o_(o), full_(scale == NursebotScale::Full)
    {
        const std::size_t loc = full_ ? 3 : 1;
        const std::size_t two = full_ ? 2 : 1;
        space_ = FeatureSpace({{"robot_loc", loc, first({"room", "physio", "home"}, loc)},
                               {"person_loc", loc, first({"room", "physio", "hallway"}, loc)},
                               {"attention", 2, {"attentive", "distracted"}},
                               {"battery", two, first({"high", "low"}, two)},
                               {"motion_goal", 2, {"none", "physio"}},
                               {"reminder", two, first({"none", "physio"}, two)},
                               {"user_goal", 4, {"none", "weather", "time", "schedule"}}});
        actions_.push_back({"DoNothing", Kind::DoNothing});
        if (full_) {
            actions_.push_back({"gotoPatientRoom", Kind::GotoRoom});
            actions_.push_back({"RingBell", Kind::RingBell});
            actions_.push_back({"RemindPhysioAppt", Kind::Remind});
        }
        actions_.push_back({"ConfirmGuideToPhysio", Kind::ConfirmGuide});
        actions_.push_back({"GuideToPhysio", Kind::Guide});
        if (full_) {
            actions_.push_back({"CheckUserPresent", Kind::CheckUser});
            actions_.push_back({"TerminateGuidance", Kind::Terminate});
            actions_.push_back({"CheckBattery", Kind::CheckBattery});
            actions_.push_back({"GoHome", Kind::GoHome});
            actions_.push_back({"RechargeBattery", Kind::Recharge});
        }
        actions_.push_back({"VerifyInfoRequest", Kind::Verify});
        actions_.push_back({"ConfirmDone", Kind::ConfirmDone});
        actions_.push_back({"ConfirmWantWeather", Kind::ConfirmWant, Weather});
        actions_.push_back({"ConfirmWantTime", Kind::ConfirmWant, Time});
        actions_.push_back({"ConfirmWantSchedule", Kind::ConfirmWant, Schedule});
        actions_.push_back({"TellWeather", Kind::Tell, Weather});
        actions_.push_back({"TellTime", Kind::Tell, Time});
        actions_.push_back({"TellSchedule", Kind::Tell, Schedule});
    }

    Domain build() const
    {
        ModelSpec spec;
        spec.space = space_;
        for (const auto& a : actions_)
            spec.actions.push_back(a.name);
        spec.observations = kObservationNames;
        spec.discount = o_.discount;
        spec.step = [this](const Assignment& v, ActionId a) { return step(v, actions_[a]); };
        spec.reward = [this](const Assignment& v, ActionId a) { return reward(v, actions_[a]); };
        spec.observe = [this](ActionId a, const Assignment& v) { return observe(actions_[a], v); };

        Domain d;
        d.name = full_ ? "nursebot" : "nursebot-small";
        d.model = build_model(spec);
        d.hierarchy = hierarchy();
        const Assignment start{Room, PRoom, Distracted, High, None, None, NoRequest};
        d.initial = Belief::point(d.model.num_states(), space_.encode(start));
        return d;
    }

private:
    static std::vector<std::string> first(std::vector<std::string> labels, std::size_t k)
    {
        labels.resize(k);
        return labels;
    }

    bool has_locations() const { return full_; }

    // Request the user would voice: the information goal, else the motion goal.
    std::optional<ObsId> pending_word(const Assignment& v) const
    {
        if (v[Request] != NoRequest)
            return WordWeather + (v[Request] - Weather);
        if (v[Motion] == Pending)
            return WordPhysio;
        return std::nullopt;
    }

    Outcomes effect(const Assignment& v, const ActionDef& a) const
    {
        Assignment next = v;
        switch (a.kind) {
        case Kind::GotoRoom:
            next[Robot] = Room;
            break;
        case Kind::RingBell:
            if (v[Reminder] == Pending && v[Robot] == Room)
                next[Person] = PRoom;
            break;
        case Kind::Remind:
            if (remind_ok(v)) {
                next[Reminder] = None;
                next[Motion] = Pending;
            }
            break;
        case Kind::Guide:
            if (guide_ok(v)) {
                if (!has_locations()) {
                    next[Motion] = None;
                    break;
                }
                // The person may trail behind in the hallway.
                next[Robot] = Physio;
                next[Person] = PPhysio;
                Assignment lagging = next;
                lagging[Person] = PHallway;
                return {{next, 0.8}, {lagging, 0.2}};
            }
            break;
        case Kind::Terminate:
            if (terminate_ok(v)) {
                next[Motion] = None;
                next[Person] = PRoom;
            }
            break;
        case Kind::GoHome:
            next[Robot] = Home;
            break;
        case Kind::Recharge:
            if (v[Battery] == Low && v[Robot] == Home)
                next[Battery] = High;
            break;
        case Kind::Tell:
            if (v[Request] == a.topic)
                next[Request] = NoRequest;
            break;
        default:
            break;
        }
        return {{next, 1.0}};
    }

    bool remind_ok(const Assignment& v) const
    {
        return v[Reminder] == Pending && v[Robot] == Room && v[Person] == PRoom;
    }
    bool guide_ok(const Assignment& v) const
    {
        return v[Motion] == Pending && v[Robot] == Room && v[Person] == PRoom;
    }
    bool user_present(const Assignment& v) const
    {
        return (v[Person] == PRoom && v[Robot] == Room) || (v[Person] == PPhysio && v[Robot] == Physio);
    }
    bool terminate_ok(const Assignment& v) const
    {
        return v[Motion] == Pending && v[Robot] == Physio && v[Person] == PPhysio;
    }

    // Action effect followed by independent exogenous changes conditioned on
    // the origin: request arrivals and scheduler reminders (both only while the
    // robot is idle), battery drain and a trailing person catching up.
    // Attention is set by the action and arrivals only.
    Outcomes step(const Assignment& v, const ActionDef& a) const
    {
        Outcomes out = effect(v, a);
        const double r = o_.request_rate;
        const auto branch = [&out](auto&& f) {
            Outcomes next;
            for (auto& [x, p] : out)
                for (auto& [y, q] : f(x))
                    next.emplace_back(std::move(y), p * q);
            out = std::move(next);
        };
        for (auto& [x, p] : out)
            x[Attention] = is_speech(a.kind) ? Attentive : Distracted;
        // One request channel: a new request arrives only when none is pending.
        if (a.kind == Kind::DoNothing && !pending_word(v)) {
            const bool motion = space_.feature(Motion).cardinality > 1;
            const double share = r / (motion ? 4.0 : 3.0);
            branch([&](const Assignment& x) -> Outcomes {
                if (pending_word(x))
                    return {{x, 1.0}};
                Outcomes o{{x, 1.0 - r}};
                for (std::size_t g = Weather; g <= Schedule; ++g) {
                    Assignment y = x;
                    y[Request] = g;
                    y[Attention] = Attentive;
                    o.emplace_back(std::move(y), share);
                }
                if (motion) {
                    Assignment y = x;
                    y[Motion] = Pending;
                    y[Attention] = Attentive;
                    o.emplace_back(std::move(y), share);
                }
                return o;
            });
        }
        if (full_) {
            if (v[Battery] == High && a.kind != Kind::Recharge)
                branch([&](const Assignment& x) {
                    Assignment y = x;
                    y[Battery] = Low;
                    return Outcomes{{x, 0.98}, {std::move(y), 0.02}};
                });
            if (v[Reminder] == None && a.kind == Kind::DoNothing)
                branch([&](const Assignment& x) {
                    Assignment y = x;
                    y[Reminder] = Pending;
                    return Outcomes{{x, 0.98}, {std::move(y), 0.02}};
                });
            if (v[Person] == PHallway)
                branch([&](const Assignment& x) -> Outcomes {
                    if (x[Person] != PHallway)
                        return {{x, 1.0}};
                    Assignment y = x;
                    y[Person] = PPhysio;
                    return {{x, 0.5}, {std::move(y), 0.5}};
                });
        }
        return out;
    }

    double reward(const Assignment& v, const ActionDef& a) const
    {
        switch (a.kind) {
        case Kind::DoNothing:
            return -1.0;
        case Kind::GotoRoom:
            return v[Reminder] == Pending && v[Robot] != Room ? 5.0 : -5.0;
        case Kind::RingBell:
            return v[Reminder] == Pending && v[Robot] == Room && v[Person] != PRoom ? 5.0 : -5.0;
        case Kind::Remind:
            return remind_ok(v) ? 50.0 : -100.0;
        case Kind::ConfirmGuide:
            return -5.0;
        case Kind::Guide:
            return guide_ok(v) ? 50.0 : -100.0;
        case Kind::CheckUser:
            return -1.0;
        case Kind::Terminate:
            return terminate_ok(v) ? 50.0 : -100.0;
        case Kind::CheckBattery:
            return -5.0;
        case Kind::GoHome:
            return v[Battery] == Low && v[Robot] != Home && v[Reminder] == None ? 5.0 : -5.0;
        case Kind::Recharge:
            return v[Battery] == Low && v[Robot] == Home ? 20.0 : -5.0;
        case Kind::Verify:
        case Kind::ConfirmDone:
        case Kind::ConfirmWant:
            return -1.0;
        case Kind::Tell:
            return v[Request] == a.topic ? 50.0 : -50.0;
        }
        return 0.0;
    }

    double noise(const Assignment& v) const
    {
        return v[Attention] == Attentive ? o_.attentive_noise : o_.distracted_noise;
    }

    std::vector<double> word(const Assignment& v) const
    {
        std::vector<double> p(ObsCount, 0.0);
        const double n = noise(v);
        p[Noise] = n;
        const auto w = pending_word(v);
        if (!w) {
            p[No] = 1.0 - n;
            return p;
        }
        const ObsId last = space_.feature(Motion).cardinality > 1 ? WordPhysio : WordSchedule;
        const double others = static_cast<double>(last - WordWeather);
        for (ObsId o = WordWeather; o <= last; ++o)
            p[o] = (1.0 - n) * (o == *w ? o_.word_accuracy : (1.0 - o_.word_accuracy) / others);
        return p;
    }

    // Short yes/no replies are never lost to noise.
    std::vector<double> answer(bool affirmative) const
    {
        std::vector<double> p(ObsCount, 0.0);
        p[Yes] = affirmative ? o_.answer_accuracy : 1.0 - o_.answer_accuracy;
        p[No] = 1.0 - p[Yes];
        return p;
    }

    std::vector<double> sensor(std::size_t truth, std::size_t first_obs, std::size_t values) const
    {
        std::vector<double> p(ObsCount, 0.0);
        if (values == 1) {
            p[first_obs] = 1.0;
            return p;
        }
        for (std::size_t k = 0; k < values; ++k)
            p[first_obs + k] =
                k == truth ? o_.sensor_accuracy : (1.0 - o_.sensor_accuracy) / static_cast<double>(values - 1);
        return p;
    }

    std::vector<double> laser(const Assignment& v) const
    {
        return sensor(v[Robot], AtRoom, space_.feature(Robot).cardinality);
    }

    std::vector<double> observe(const ActionDef& a, const Assignment& v) const
    {
        switch (a.kind) {
        case Kind::DoNothing: {
            std::vector<double> p(ObsCount, 0.0);
            if (pending_word(v)) {
                if (v[Attention] == Attentive)
                    return word(v);
                p[Noise] = 1.0;
            } else if (v[Reminder] == Pending) {
                p[PhysioMessage] = 1.0;
            } else {
                p[Null] = 1.0;
            }
            return p;
        }
        case Kind::GotoRoom:
        case Kind::Guide:
        case Kind::GoHome:
            return laser(v);
        case Kind::RingBell:
        case Kind::CheckUser:
            return sensor(user_present(v) ? 0 : 1, User, 2);
        case Kind::Remind:
            return answer(v[Reminder] == None);
        case Kind::ConfirmGuide:
            return answer(v[Motion] == Pending);
        case Kind::Terminate:
            return answer(v[Motion] == None);
        case Kind::CheckBattery:
        case Kind::Recharge:
            return sensor(v[Battery], BatteryHigh, 2);
        case Kind::Verify:
            return word(v);
        case Kind::ConfirmDone:
            return answer(!pending_word(v));
        case Kind::ConfirmWant:
            return answer(v[Request] == a.topic);
        case Kind::Tell:
            return answer(v[Request] == NoRequest);
        }
        return {};
    }

    TaskGraph hierarchy() const
    {
        TaskGraph g;
        g.root = "root";
        g.nodes.push_back({"inform",
                           {"ConfirmWantWeather", "ConfirmWantTime", "ConfirmWantSchedule", "TellWeather", "TellTime",
                            "TellSchedule"},
                           {},
                           std::nullopt,
                           {}});
        g.nodes.push_back({"assist", {"inform", "VerifyInfoRequest", "ConfirmDone"}, {}, std::nullopt, {}});
        if (full_) {
            g.nodes.push_back({"guide",
                               {"ConfirmGuideToPhysio", "GuideToPhysio", "CheckUserPresent", "TerminateGuidance"},
                               {},
                               std::nullopt,
                               {}});
            g.nodes.push_back(
                {"remind", {"gotoPatientRoom", "RingBell", "RemindPhysioAppt"}, {}, std::nullopt, {}});
            g.nodes.push_back({"rest", {"CheckBattery", "GoHome", "RechargeBattery"}, {}, std::nullopt, {}});
            g.nodes.push_back({"root", {"DoNothing", "remind", "guide", "assist", "rest"}, {}, std::nullopt, {}});
        } else {
            g.nodes.push_back({"guide", {"ConfirmGuideToPhysio", "GuideToPhysio"}, {}, std::nullopt, {}});
            g.nodes.push_back({"root", {"DoNothing", "guide", "assist"}, {}, std::nullopt, {}});
        }
        return g;
    }

    NursebotOptions o_;
    bool full_;
    FeatureSpace space_;
    std::vector<ActionDef> actions_;
};

} // namespace nb

} // namespace

Domain build_taxi(const TaxiOptions& options)
{
    return build_taxi_like(options, options.any_cell_passenger, options.any_cell_passenger ? "taxi2" : "taxi");
}

Domain build_taxi2(TaxiOptions options)
{
    options.any_cell_passenger = true;
    return build_taxi(options);
}

Domain build_nursebot(NursebotScale scale, const NursebotOptions& options)
{
    if (options.attentive_noise <= 0.0 || options.distracted_noise <= 0.0 || options.attentive_noise >= 1.0 ||
        options.distracted_noise >= 1.0)
        throw InvalidInput("speech noise must lie strictly between 0 and 1");
    if (options.request_rate < 0.0 || options.request_rate > 1.0)
        throw InvalidInput("request rate must lie in [0, 1]");
    return nb::Builder(scale, options).build();
}

Domain build_micro()
{
    ModelSpec spec;
    spec.space = FeatureSpace({{"cell", 4, {"s0", "s1", "s2", "s3"}}});
    spec.actions = {"stay", "left", "right"};
    spec.discount = 0.95;
    spec.step = [](const Assignment& v, ActionId a) -> Outcomes {
        Assignment next = v;
        if (a == 1 && v[0] > 0)
            --next[0];
        if (a == 2 && v[0] < 3)
            ++next[0];
        return {{next, 1.0}};
    };
    spec.reward = [](const Assignment& v, ActionId a) {
        if (a != 0)
            return -1.0;
        return v[0] == 2 ? 5.0 : 0.0;
    };

    Domain d;
    d.name = "micro";
    d.model = build_model(spec);
    const Condition goal = all_of({clause("cell", {std::string("s2")})});
    d.hierarchy.root = "h0";
    d.hierarchy.nodes.push_back({"h1", {"left", "right"}, {{goal, std::nullopt, 1.0}}, goal, {}});
    d.hierarchy.nodes.push_back({"h0", {"stay", "h1"}, {}, std::nullopt, {}});
    d.initial = Belief::point(4, 0);
    return d;
}

const std::vector<std::string>& domain_names()
{
    static const std::vector<std::string> names{"taxi", "taxi2", "nursebot", "nursebot-small", "micro"};
    return names;
}

Domain build_domain(std::string_view name)
{
    if (name == "taxi")
        return build_taxi();
    if (name == "taxi2")
        return build_taxi2();
    if (name == "nursebot")
        return build_nursebot(NursebotScale::Full);
    if (name == "nursebot-small")
        return build_nursebot(NursebotScale::Small);
    if (name == "micro")
        return build_micro();
    throw InvalidInput("unknown domain '" + std::string(name) + "'");
}

} // namespace polca
