#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace polca {

// Malformed or out-of-range arguments supplied by a caller.
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Bayes update whose normalizer vanished: the observation cannot occur under
// the predicted belief.
class ImpossibleObservation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Projection requested over a partition that is not stable.
class UnstablePartition : public InvalidInput {
public:
    using InvalidInput::InvalidInput;
};

// A subtask was parameterized before one of its children was solved.
class OrderingViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// Local reward is uniform and no pseudo-reward was declared.
class UnsolvableSubtask : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Exact POMDP solving refused because the clustered model exceeds the cap.
class ProblemTooLarge : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Wraps any failure raised while planning a specific subtask.
class SubtaskFailure : public std::runtime_error {
public:
    SubtaskFailure(std::string subtask, const std::string& what)
        : std::runtime_error("subtask '" + subtask + "': " + what), subtask_(std::move(subtask)) {}

    const std::string& subtask() const noexcept { return subtask_; }

private:
    std::string subtask_;
};

} // namespace polca
