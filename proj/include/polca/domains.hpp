#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "polca/hierarchy.hpp"
#include "polca/model.hpp"

namespace polca {

struct Domain {
    std::string name;
    DecisionModel model;
    TaskGraph hierarchy;
    Belief initial;  // start distribution used by simulations
};

struct TaxiOptions {
    double step_reward = -1.0;
    double delivery_reward = 20.0;
    double illegal_reward = -10.0;
    double discount = 0.95;
    // Passenger may start on any cell instead of only at the four landmarks.
    bool any_cell_passenger = false;
};

/// 5x5 Taxi with the canonical wall layout. Features x (column, 0 = west),
/// y (row, 0 = north), passenger, destination. Delivered states absorb with
/// zero reward.
Domain build_taxi(const TaxiOptions& options = {});
Domain build_taxi2(TaxiOptions options = {});

enum class NursebotScale { Small, Full };

struct NursebotOptions {
    double attentive_noise = 0.2;    // request word heard as "noise" when the user is attentive
    double distracted_noise = 0.4;   // and when distracted
    double sensor_accuracy = 1.0;    // laser, IR and battery readings
    double word_accuracy = 0.85;     // request word heard correctly, given it was not noise
    double answer_accuracy = 1.0;    // yes/no heard correctly
    double request_rate = 0.1;       // per step, for each idle request channel
    double discount = 0.95;
};

/// Dialogue-and-errand POMDP over robot location, person location,
/// attention, battery, motion goal, reminder goal and user request. The full
/// scale has 576 states; the small scale keeps attention, motion goal and user
/// request (16 states) and drops the actions and subtasks that become inert.
Domain build_nursebot(NursebotScale scale, const NursebotOptions& options = {});

/// Four cells in a row with a two-level hierarchy: h0 = {stay, h1},
/// h1 = {left, right} with a goal at s2.
Domain build_micro();

/// "taxi", "taxi2", "nursebot", "nursebot-small", "micro". Throws
/// InvalidInput for other names.
Domain build_domain(std::string_view name);
const std::vector<std::string>& domain_names();

} // namespace polca
