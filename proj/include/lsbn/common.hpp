#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace lsbn {

using NodeId = std::size_t;

/// Sorted, duplicate-free list of node indices.
using NodeSet = std::vector<NodeId>;

enum class ErrorKind {
    MalformedDocument,
    CyclicArcs,
    ProbabilitySum,
    CardinalityMismatch,
    InvalidInput,
    ConditioningSetTooLarge,
    FamilyTooLarge,
    BudgetExceeded,
    UniverseMismatch,
    Io,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// splitmix64-seeded xoshiro256** generator. Draws are identical on every
/// platform, unlike the std distributions.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next();
    /// Uniform in [0, 1).
    double uniform();
    /// Uniform in [0, n). n must be > 0.
    std::size_t below(std::size_t n);

    /// Independent stream derived from this seed and a stream index.
    static Rng derive(std::uint64_t seed, std::uint64_t stream);

private:
    std::uint64_t s_[4];
};

NodeSet make_set(std::vector<NodeId> nodes);
NodeSet set_union(const NodeSet& a, const NodeSet& b);
NodeSet set_intersection(const NodeSet& a, const NodeSet& b);
NodeSet set_difference(const NodeSet& a, const NodeSet& b);
bool contains(const NodeSet& s, NodeId v);

}  // namespace lsbn
