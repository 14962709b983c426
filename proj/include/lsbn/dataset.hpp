#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lsbn/common.hpp"

namespace lsbn {

using State = std::uint16_t;

/// Column-major table of categorical observations.
class DiscreteDataset {
public:
    DiscreteDataset() = default;

    /// Builds from row-major samples; validates state ranges and row widths.
    DiscreteDataset(std::vector<std::string> names, std::vector<std::size_t> cardinalities,
                    const std::vector<std::vector<State>>& rows);

    /// Builds from already column-major data.
    static DiscreteDataset from_columns(std::vector<std::string> names,
                                        std::vector<std::size_t> cardinalities,
                                        std::vector<std::vector<State>> columns);

    std::size_t num_variables() const { return names_.size(); }
    std::size_t num_rows() const { return rows_; }
    const std::string& name(std::size_t j) const { return names_[j]; }
    const std::vector<std::string>& names() const { return names_; }
    std::size_t cardinality(std::size_t j) const { return cards_[j]; }
    const std::vector<std::size_t>& cardinalities() const { return cards_; }
    std::span<const State> column(std::size_t j) const { return columns_[j]; }
    State at(std::size_t row, std::size_t j) const { return columns_[j][row]; }

    bool operator==(const DiscreteDataset&) const = default;

private:
    void validate() const;

    std::vector<std::string> names_;
    std::vector<std::size_t> cards_;
    std::vector<std::vector<State>> columns_;
    std::size_t rows_ = 0;
};

struct Variable {
    std::string name;
    std::vector<std::string> states;

    std::size_t cardinality() const { return states.size(); }
    bool operator==(const Variable&) const = default;
};

/// DAG with conditional probability tables. Parent order of each child is the
/// order its arcs were declared; CPT rows are indexed mixed-radix over that
/// order with the last parent varying fastest.
class GroundTruthNet {
public:
    GroundTruthNet() = default;
    GroundTruthNet(std::vector<Variable> variables, std::vector<std::pair<NodeId, NodeId>> arcs,
                   std::vector<std::vector<std::vector<double>>> cpts);

    std::size_t num_variables() const { return variables_.size(); }
    const std::vector<Variable>& variables() const { return variables_; }
    const Variable& variable(NodeId v) const { return variables_[v]; }
    const std::vector<std::pair<NodeId, NodeId>>& arcs() const { return arcs_; }
    const std::vector<NodeId>& parents(NodeId v) const { return parents_[v]; }
    const std::vector<std::vector<double>>& cpt(NodeId v) const { return cpts_[v]; }

    /// Index of the CPT row for the given full assignment.
    std::size_t row_index(NodeId v, std::span<const State> assignment) const;

    /// Kahn order, lowest index first among ready variables.
    const std::vector<NodeId>& topological_order() const { return topo_; }

    /// Parents, children and co-parents.
    NodeSet markov_blanket(NodeId v) const;

    std::size_t index_of(const std::string& name) const;

    bool operator==(const GroundTruthNet& other) const {
        return variables_ == other.variables_ && arcs_ == other.arcs_ && cpts_ == other.cpts_;
    }

private:
    std::vector<Variable> variables_;
    std::vector<std::pair<NodeId, NodeId>> arcs_;
    std::vector<std::vector<NodeId>> parents_;
    std::vector<std::vector<std::vector<double>>> cpts_;
    std::vector<NodeId> topo_;
};

GroundTruthNet parse_network(const std::string& text);
std::string serialize_network(const GroundTruthNet& net);
GroundTruthNet load_network(const std::string& path);

/// Ancestral sampling; bit-identical for identical (net, n, seed).
DiscreteDataset forward_sample(const GroundTruthNet& net, std::size_t n, std::uint64_t seed);

/// Equal-frequency binning of each column of a row-major real table.
DiscreteDataset discretize(const std::vector<std::vector<double>>& table, std::size_t bins,
                           std::vector<std::string> names = {});

/// Tab-separated: header of names, then one row of state indices per sample.
/// Cardinalities are inferred on load as max(2, max state + 1).
void write_dataset(std::ostream& out, const DiscreteDataset& data);
DiscreteDataset read_dataset(std::istream& in);
void save_dataset(const std::string& path, const DiscreteDataset& data);
DiscreteDataset load_dataset(const std::string& path);

}  // namespace lsbn
