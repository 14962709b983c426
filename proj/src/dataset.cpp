#include "lsbn/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <queue>
#include <sstream>

namespace lsbn {

namespace {

constexpr double kRowSumTolerance = 1e-9;

std::vector<std::string> split_ws(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream in(line);
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
}

std::string at_line(std::size_t line) { return "line " + std::to_string(line) + ": "; }

double parse_double(const std::string& tok, std::size_t line) {
    try {
        std::size_t used = 0;
        const double v = std::stod(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        throw Error(ErrorKind::MalformedDocument, at_line(line) + "bad number '" + tok + "'");
    }
}

std::size_t parse_count(const std::string& tok, std::size_t line) {
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size())
        throw Error(ErrorKind::MalformedDocument, at_line(line) + "bad integer '" + tok + "'");
    return v;
}

}  // namespace

// ---------------------------------------------------------------------------
// DiscreteDataset

DiscreteDataset::DiscreteDataset(std::vector<std::string> names, std::vector<std::size_t> cardinalities,
                                 const std::vector<std::vector<State>>& rows)
    : names_(std::move(names)), cards_(std::move(cardinalities)), rows_(rows.size()) {
    if (names_.size() != cards_.size())
        throw Error(ErrorKind::InvalidInput, "name and cardinality counts differ");
    columns_.assign(names_.size(), std::vector<State>(rows_));
    for (std::size_t r = 0; r < rows_; ++r) {
        if (rows[r].size() != names_.size())
            throw Error(ErrorKind::InvalidInput, "row " + std::to_string(r) + " has " +
                                                     std::to_string(rows[r].size()) + " entries, expected " +
                                                     std::to_string(names_.size()));
        for (std::size_t j = 0; j < names_.size(); ++j) columns_[j][r] = rows[r][j];
    }
    validate();
}

DiscreteDataset DiscreteDataset::from_columns(std::vector<std::string> names,
                                              std::vector<std::size_t> cardinalities,
                                              std::vector<std::vector<State>> columns) {
    DiscreteDataset d;
    d.names_ = std::move(names);
    d.cards_ = std::move(cardinalities);
    d.columns_ = std::move(columns);
    if (d.names_.size() != d.cards_.size() || d.names_.size() != d.columns_.size())
        throw Error(ErrorKind::InvalidInput, "name, cardinality and column counts differ");
    d.rows_ = d.columns_.empty() ? 0 : d.columns_.front().size();
    for (const auto& c : d.columns_)
        if (c.size() != d.rows_) throw Error(ErrorKind::InvalidInput, "columns have unequal length");
    d.validate();
    return d;
}

void DiscreteDataset::validate() const {
    for (std::size_t j = 0; j < names_.size(); ++j) {
        if (cards_[j] < 2)
            throw Error(ErrorKind::InvalidInput, "variable '" + names_[j] + "' has cardinality < 2");
        if (cards_[j] > std::numeric_limits<State>::max())
            throw Error(ErrorKind::InvalidInput, "variable '" + names_[j] + "' has too many states");
        for (std::size_t r = 0; r < rows_; ++r)
            if (columns_[j][r] >= cards_[j])
                throw Error(ErrorKind::InvalidInput, "state " + std::to_string(columns_[j][r]) + " of '" +
                                                         names_[j] + "' at row " + std::to_string(r) +
                                                         " out of range");
    }
}

// ---------------------------------------------------------------------------
// GroundTruthNet

GroundTruthNet::GroundTruthNet(std::vector<Variable> variables, std::vector<std::pair<NodeId, NodeId>> arcs,
                               std::vector<std::vector<std::vector<double>>> cpts)
    : variables_(std::move(variables)), arcs_(std::move(arcs)), cpts_(std::move(cpts)) {
    const std::size_t n = variables_.size();
    parents_.assign(n, {});
    for (const auto& [p, c] : arcs_) {
        if (p >= n || c >= n) throw Error(ErrorKind::InvalidInput, "arc endpoint out of range");
        if (p == c) throw Error(ErrorKind::CyclicArcs, "self-loop on '" + variables_[p].name + "'");
        if (std::find(parents_[c].begin(), parents_[c].end(), p) != parents_[c].end())
            throw Error(ErrorKind::MalformedDocument,
                        "duplicate arc " + variables_[p].name + " -> " + variables_[c].name);
        parents_[c].push_back(p);
    }

    // Kahn's algorithm with a min-heap for the lowest-index-first rule.
    std::vector<std::size_t> indegree(n);
    std::vector<std::vector<NodeId>> children(n);
    for (const auto& [p, c] : arcs_) {
        ++indegree[c];
        children[p].push_back(c);
    }
    std::priority_queue<NodeId, std::vector<NodeId>, std::greater<>> ready;
    for (NodeId v = 0; v < n; ++v)
        if (indegree[v] == 0) ready.push(v);
    while (!ready.empty()) {
        const NodeId v = ready.top();
        ready.pop();
        topo_.push_back(v);
        for (NodeId c : children[v])
            if (--indegree[c] == 0) ready.push(c);
    }
    if (topo_.size() != n) {
        for (NodeId v = 0; v < n; ++v)
            if (indegree[v] > 0)
                throw Error(ErrorKind::CyclicArcs, "cycle through '" + variables_[v].name + "'");
    }

    if (cpts_.size() != n) throw Error(ErrorKind::CardinalityMismatch, "CPT count differs from variable count");
    for (NodeId v = 0; v < n; ++v) {
        std::size_t rows = 1;
        for (NodeId p : parents_[v]) rows *= variables_[p].cardinality();
        if (cpts_[v].size() != rows)
            throw Error(ErrorKind::CardinalityMismatch, "'" + variables_[v].name + "' has " +
                                                            std::to_string(cpts_[v].size()) + " CPT rows, expected " +
                                                            std::to_string(rows));
        for (std::size_t r = 0; r < rows; ++r) {
            const auto& row = cpts_[v][r];
            if (row.size() != variables_[v].cardinality())
                throw Error(ErrorKind::CardinalityMismatch,
                            "'" + variables_[v].name + "' CPT row " + std::to_string(r) + " has wrong length");
            double sum = 0.0;
            for (double p : row) {
                if (!(p >= 0.0)) throw Error(ErrorKind::ProbabilitySum, "negative probability in '" +
                                                                            variables_[v].name + "'");
                sum += p;
            }
            if (std::abs(sum - 1.0) > kRowSumTolerance)
                throw Error(ErrorKind::ProbabilitySum,
                            "'" + variables_[v].name + "' CPT row " + std::to_string(r) + " sums to " +
                                std::to_string(sum));
        }
    }
}

std::size_t GroundTruthNet::row_index(NodeId v, std::span<const State> assignment) const {
    std::size_t idx = 0;
    for (NodeId p : parents_[v]) idx = idx * variables_[p].cardinality() + assignment[p];
    return idx;
}

NodeSet GroundTruthNet::markov_blanket(NodeId v) const {
    std::vector<NodeId> mb(parents_[v].begin(), parents_[v].end());
    for (const auto& [p, c] : arcs_) {
        if (p != v) continue;
        mb.push_back(c);
        for (NodeId spouse : parents_[c])
            if (spouse != v) mb.push_back(spouse);
    }
    return make_set(std::move(mb));
}

std::size_t GroundTruthNet::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < variables_.size(); ++i)
        if (variables_[i].name == name) return i;
    throw Error(ErrorKind::InvalidInput, "unknown variable '" + name + "'");
}

// ---------------------------------------------------------------------------
// Network text format

GroundTruthNet parse_network(const std::string& text) {
    std::vector<Variable> variables;
    std::map<std::string, NodeId> index;
    std::vector<std::pair<NodeId, NodeId>> arcs;
    struct PendingRow {
        NodeId child;
        std::vector<std::string> parent_states;
        std::vector<double> probs;
        std::size_t line;
    };
    std::vector<PendingRow> rows;

    auto lookup = [&](const std::string& name, std::size_t line) {
        auto it = index.find(name);
        if (it == index.end())
            throw Error(ErrorKind::MalformedDocument, at_line(line) + "undeclared variable '" + name + "'");
        return it->second;
    };

    std::istringstream in(text);
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
        auto tok = split_ws(raw);
        if (tok.empty()) continue;
        if (tok[0] == "var") {
            if (tok.size() < 3) throw Error(ErrorKind::MalformedDocument, at_line(line_no) + "truncated var");
            const std::size_t k = parse_count(tok[2], line_no);
            if (tok.size() != 3 + k)
                throw Error(ErrorKind::CardinalityMismatch,
                            at_line(line_no) + "'" + tok[1] + "' declares " + std::to_string(k) + " states but lists " +
                                std::to_string(tok.size() - 3));
            if (k < 1) throw Error(ErrorKind::CardinalityMismatch, at_line(line_no) + "zero states");
            if (index.count(tok[1]))
                throw Error(ErrorKind::MalformedDocument, at_line(line_no) + "duplicate variable '" + tok[1] + "'");
            index[tok[1]] = variables.size();
            variables.push_back({tok[1], {tok.begin() + 3, tok.end()}});
        } else if (tok[0] == "arc") {
            if (tok.size() != 3) throw Error(ErrorKind::MalformedDocument, at_line(line_no) + "arc needs 2 names");
            arcs.emplace_back(lookup(tok[1], line_no), lookup(tok[2], line_no));
        } else if (tok[0] == "cpt") {
            if (tok.size() < 3 || tok[2] != "|")
                throw Error(ErrorKind::MalformedDocument, at_line(line_no) + "expected 'cpt <child> | ... : ...'");
            auto colon = std::find(tok.begin() + 3, tok.end(), ":");
            if (colon == tok.end()) throw Error(ErrorKind::MalformedDocument, at_line(line_no) + "missing ':'");
            PendingRow row{lookup(tok[1], line_no), {tok.begin() + 3, colon}, {}, line_no};
            for (auto it = colon + 1; it != tok.end(); ++it) row.probs.push_back(parse_double(*it, line_no));
            rows.push_back(std::move(row));
        } else {
            throw Error(ErrorKind::MalformedDocument, at_line(line_no) + "unknown directive '" + tok[0] + "'");
        }
    }

    const std::size_t n = variables.size();
    std::vector<std::vector<NodeId>> parents(n);
    for (const auto& [p, c] : arcs) parents[c].push_back(p);

    std::vector<std::vector<std::vector<double>>> cpts(n);
    std::vector<std::vector<bool>> seen(n);
    for (NodeId v = 0; v < n; ++v) {
        std::size_t q = 1;
        for (NodeId p : parents[v]) q *= variables[p].cardinality();
        cpts[v].assign(q, {});
        seen[v].assign(q, false);
    }
    for (const auto& row : rows) {
        const auto& pa = parents[row.child];
        if (row.parent_states.size() != pa.size())
            throw Error(ErrorKind::CardinalityMismatch,
                        at_line(row.line) + "'" + variables[row.child].name + "' has " + std::to_string(pa.size()) +
                            " parents but row lists " + std::to_string(row.parent_states.size()) + " states");
        std::size_t idx = 0;
        for (std::size_t i = 0; i < pa.size(); ++i) {
            const auto& states = variables[pa[i]].states;
            auto it = std::find(states.begin(), states.end(), row.parent_states[i]);
            if (it == states.end())
                throw Error(ErrorKind::MalformedDocument, at_line(row.line) + "unknown state '" +
                                                              row.parent_states[i] + "' of '" +
                                                              variables[pa[i]].name + "'");
            idx = idx * states.size() + static_cast<std::size_t>(it - states.begin());
        }
        if (row.probs.size() != variables[row.child].cardinality())
            throw Error(ErrorKind::CardinalityMismatch, at_line(row.line) + "row has " +
                                                            std::to_string(row.probs.size()) + " probabilities, '" +
                                                            variables[row.child].name + "' has " +
                                                            std::to_string(variables[row.child].cardinality()) +
                                                            " states");
        double sum = std::accumulate(row.probs.begin(), row.probs.end(), 0.0);
        if (std::abs(sum - 1.0) > kRowSumTolerance)
            throw Error(ErrorKind::ProbabilitySum, at_line(row.line) + "row sums to " + std::to_string(sum));
        if (seen[row.child][idx])
            throw Error(ErrorKind::MalformedDocument, at_line(row.line) + "duplicate CPT row");
        seen[row.child][idx] = true;
        cpts[row.child][idx] = row.probs;
    }
    for (NodeId v = 0; v < n; ++v)
        for (std::size_t r = 0; r < seen[v].size(); ++r)
            if (!seen[v][r])
                throw Error(ErrorKind::CardinalityMismatch,
                            "'" + variables[v].name + "' is missing CPT row " + std::to_string(r));

    return GroundTruthNet(std::move(variables), std::move(arcs), std::move(cpts));
}

std::string serialize_network(const GroundTruthNet& net) {
    std::ostringstream out;
    out.precision(17);
    for (const auto& v : net.variables()) {
        out << "var " << v.name << ' ' << v.cardinality();
        for (const auto& s : v.states) out << ' ' << s;
        out << '\n';
    }
    for (const auto& [p, c] : net.arcs())
        out << "arc " << net.variable(p).name << ' ' << net.variable(c).name << '\n';
    for (NodeId v = 0; v < net.num_variables(); ++v) {
        const auto& pa = net.parents(v);
        const auto& table = net.cpt(v);
        std::vector<std::size_t> config(pa.size(), 0);
        for (std::size_t r = 0; r < table.size(); ++r) {
            out << "cpt " << net.variable(v).name << " |";
            for (std::size_t i = 0; i < pa.size(); ++i) out << ' ' << net.variable(pa[i]).states[config[i]];
            out << " :";
            for (double p : table[r]) out << ' ' << p;
            out << '\n';
            for (std::size_t i = pa.size(); i-- > 0;) {
                if (++config[i] < net.variable(pa[i]).cardinality()) break;
                config[i] = 0;
            }
        }
    }
    return out.str();
}

GroundTruthNet load_network(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open network file '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_network(buffer.str());
}

// ---------------------------------------------------------------------------
// Sampling

DiscreteDataset forward_sample(const GroundTruthNet& net, std::size_t n, std::uint64_t seed) {
    const std::size_t m = net.num_variables();
    std::vector<std::string> names;
    std::vector<std::size_t> cards;
    for (const auto& v : net.variables()) {
        names.push_back(v.name);
        cards.push_back(std::max<std::size_t>(2, v.cardinality()));
    }
    std::vector<std::vector<State>> columns(m, std::vector<State>(n));
    std::vector<State> assignment(m);
    Rng rng(seed);
    const auto& order = net.topological_order();
    for (std::size_t r = 0; r < n; ++r) {
        for (NodeId v : order) {
            const auto& probs = net.cpt(v)[net.row_index(v, assignment)];
            const double u = rng.uniform();
            double acc = 0.0;
            State s = static_cast<State>(probs.size() - 1);
            for (std::size_t k = 0; k < probs.size(); ++k) {
                acc += probs[k];
                if (u < acc) {
                    s = static_cast<State>(k);
                    break;
                }
            }
            // Guard against trailing zero-probability states absorbing rounding slack.
            while (s > 0 && probs[s] == 0.0) --s;
            assignment[v] = s;
            columns[v][r] = s;
        }
    }
    return DiscreteDataset::from_columns(std::move(names), std::move(cards), std::move(columns));
}

// ---------------------------------------------------------------------------
// Discretization

DiscreteDataset discretize(const std::vector<std::vector<double>>& table, std::size_t bins,
                           std::vector<std::string> names) {
    if (bins < 2) throw Error(ErrorKind::InvalidInput, "bins must be >= 2");
    if (table.empty()) throw Error(ErrorKind::InvalidInput, "discretize needs at least one row");
    const std::size_t n = table.size();
    const std::size_t v = table.front().size();
    for (const auto& row : table)
        if (row.size() != v) throw Error(ErrorKind::InvalidInput, "ragged table");
    if (names.empty())
        for (std::size_t j = 0; j < v; ++j) names.push_back("X" + std::to_string(j));
    if (names.size() != v) throw Error(ErrorKind::InvalidInput, "name count differs from column count");

    std::vector<std::vector<State>> columns(v, std::vector<State>(n));
    std::vector<std::size_t> cards(v);
    std::vector<std::size_t> order(n);
    for (std::size_t j = 0; j < v; ++j) {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return table[a][j] < table[b][j]; });

        // Group equal values; each group lands in a single bin.
        std::vector<std::pair<std::size_t, std::size_t>> groups;  // (first rank, size)
        for (std::size_t r = 0; r < n;) {
            std::size_t e = r;
            while (e < n && table[order[e]][j] == table[order[r]][j]) ++e;
            groups.emplace_back(r, e - r);
            r = e;
        }
        if (groups.size() < 2)
            throw Error(ErrorKind::InvalidInput, "column '" + names[j] + "' is constant");

        std::vector<std::size_t> group_bin(groups.size());
        if (groups.size() <= bins) {
            std::iota(group_bin.begin(), group_bin.end(), 0);
        } else {
            for (std::size_t g = 0; g < groups.size(); ++g)
                group_bin[g] = groups[g].first * bins / n;
        }
        // Compact away empty bins.
        std::size_t next = 0;
        std::size_t prev = std::numeric_limits<std::size_t>::max();
        for (std::size_t g = 0; g < groups.size(); ++g) {
            if (group_bin[g] != prev) {
                prev = group_bin[g];
                group_bin[g] = next++;
            } else {
                group_bin[g] = next - 1;
            }
            for (std::size_t r = groups[g].first; r < groups[g].first + groups[g].second; ++r)
                columns[j][order[r]] = static_cast<State>(group_bin[g]);
        }
        cards[j] = next;
        if (next < 2) throw Error(ErrorKind::InvalidInput, "column '" + names[j] + "' collapses to one bin");
    }
    return DiscreteDataset::from_columns(std::move(names), std::move(cards), std::move(columns));
}

// ---------------------------------------------------------------------------
// Dataset files

void write_dataset(std::ostream& out, const DiscreteDataset& data) {
    for (std::size_t j = 0; j < data.num_variables(); ++j) out << (j ? "\t" : "") << data.name(j);
    out << '\n';
    for (std::size_t r = 0; r < data.num_rows(); ++r) {
        for (std::size_t j = 0; j < data.num_variables(); ++j) out << (j ? "\t" : "") << data.at(r, j);
        out << '\n';
    }
}

DiscreteDataset read_dataset(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorKind::MalformedDocument, "empty dataset file");
    std::vector<std::string> names;
    {
        std::istringstream header(line);
        std::string name;
        while (std::getline(header, name, '\t')) {
            if (!name.empty() && name.back() == '\r') name.pop_back();
            names.push_back(name);
        }
    }
    const std::size_t v = names.size();
    std::vector<std::vector<State>> columns(v);
    std::vector<std::size_t> cards(v, 2);
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string cell;
        std::size_t j = 0;
        while (std::getline(row, cell, '\t')) {
            if (j >= v) throw Error(ErrorKind::MalformedDocument, at_line(line_no) + "too many fields");
            const std::size_t s = parse_count(cell, line_no);
            if (s > std::numeric_limits<State>::max() - 1)
                throw Error(ErrorKind::MalformedDocument, at_line(line_no) + "state index too large");
            columns[j].push_back(static_cast<State>(s));
            cards[j] = std::max(cards[j], s + 1);
            ++j;
        }
        if (j != v)
            throw Error(ErrorKind::MalformedDocument, at_line(line_no) + "expected " + std::to_string(v) + " fields");
    }
    return DiscreteDataset::from_columns(std::move(names), std::move(cards), std::move(columns));
}

void save_dataset(const std::string& path, const DiscreteDataset& data) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::Io, "cannot write '" + path + "'");
    write_dataset(out, data);
}

DiscreteDataset load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open dataset '" + path + "'");
    return read_dataset(in);
}

}  // namespace lsbn
