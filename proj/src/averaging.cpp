#include "lsbn/averaging.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <istream>
#include <limits>
#include <mutex>
#include <numeric>
#include <ostream>
#include <sstream>
#include <tuple>

namespace lsbn {

namespace {

double log_gamma(double x) {
    int sign = 0;
    return ::lgamma_r(x, &sign);
}

double log_sum_exp(const std::vector<double>& xs) {
    if (xs.empty()) return -std::numeric_limits<double>::infinity();
    const double mx = *std::max_element(xs.begin(), xs.end());
    double s = 0.0;
    for (double x : xs) s += std::exp(x - mx);
    return mx + std::log(s);
}

}  // namespace

// ---------------------------------------------------------------------------
// LocalStructure

void LocalStructure::add_edge(NodeId from, NodeId to, double weight) {
    if (from == to) throw Error(ErrorKind::InvalidInput, "self-loop in structure");
    DirectedEdge e{from, to, weight};
    auto it = std::lower_bound(edges.begin(), edges.end(), e, [](const DirectedEdge& a, const DirectedEdge& b) {
        return std::tie(a.from, a.to) < std::tie(b.from, b.to);
    });
    if (it != edges.end() && it->from == from && it->to == to) {
        it->weight = weight;
        return;
    }
    edges.insert(it, e);
}

const DirectedEdge* LocalStructure::find(NodeId from, NodeId to) const {
    DirectedEdge key{from, to, 0.0};
    auto it = std::lower_bound(edges.begin(), edges.end(), key, [](const DirectedEdge& a, const DirectedEdge& b) {
        return std::tie(a.from, a.to) < std::tie(b.from, b.to);
    });
    if (it != edges.end() && it->from == from && it->to == to) return &*it;
    return nullptr;
}

void LocalStructure::sort_edges() {
    std::sort(edges.begin(), edges.end(), [](const DirectedEdge& a, const DirectedEdge& b) {
        return std::tie(a.from, a.to) < std::tie(b.from, b.to);
    });
}

void write_structure(std::ostream& out, const LocalStructure& s, bool with_weights) {
    const auto old = out.precision(17);
    for (const auto& e : s.edges) {
        out << e.from << " -> " << e.to;
        if (with_weights) out << ' ' << e.weight;
        out << '\n';
    }
    out.precision(old);
}

LocalStructure read_structure(std::istream& in) {
    LocalStructure s;
    std::string line;
    std::size_t line_no = 0;
    std::vector<NodeId> nodes;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream row(line);
        NodeId from = 0, to = 0;
        std::string arrow;
        if (!(row >> from)) continue;
        if (!(row >> arrow >> to) || arrow != "->")
            throw Error(ErrorKind::MalformedDocument, "structure line " + std::to_string(line_no) + " is malformed");
        double w = 1.0;
        row >> w;
        s.add_edge(from, to, w);
        nodes.push_back(from);
        nodes.push_back(to);
    }
    s.nodes = make_set(std::move(nodes));
    return s;
}

void write_posterior(std::ostream& out, const EdgePosterior& post) {
    const std::size_t m = post.size();
    out << "posterior " << m << '\n' << "nodes";
    for (NodeId v : post.nodes) out << ' ' << v;
    out << '\n';
    const auto old = out.precision(17);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) out << (j ? " " : "") << post.at(i, j);
        out << '\n';
    }
    out.precision(old);
}

EdgePosterior read_posterior(std::istream& in) {
    std::string tag;
    std::size_t m = 0;
    if (!(in >> tag >> m) || tag != "posterior")
        throw Error(ErrorKind::MalformedDocument, "posterior header must be 'posterior <m>'");
    if (!(in >> tag) || tag != "nodes") throw Error(ErrorKind::MalformedDocument, "missing nodes line");
    NodeSet nodes(m);
    for (auto& v : nodes)
        if (!(in >> v)) throw Error(ErrorKind::MalformedDocument, "truncated nodes line");
    EdgePosterior post(nodes);
    for (double& x : post.p)
        if (!(in >> x)) throw Error(ErrorKind::MalformedDocument, "truncated posterior matrix");
    return post;
}

// ---------------------------------------------------------------------------
// BDeu

double bdeu_family_score(const DiscreteDataset& data, NodeId child, const NodeSet& parents, double ess,
                         std::size_t max_cells) {
    if (!(ess > 0.0)) throw Error(ErrorKind::InvalidInput, "ess must be positive");
    const std::size_t r = data.cardinality(child);
    std::size_t q = 1;
    for (NodeId p : parents) {
        if (p == child) throw Error(ErrorKind::InvalidInput, "child listed among its own parents");
        const std::size_t k = data.cardinality(p);
        if (q > max_cells / k / r)
            throw Error(ErrorKind::FamilyTooLarge, "family of '" + data.name(child) + "' with " +
                                                       std::to_string(parents.size()) + " parents exceeds " +
                                                       std::to_string(max_cells) + " cells");
        q *= k;
    }
    const std::size_t n = data.num_rows();
    std::vector<std::uint32_t> counts(q * r, 0);
    std::vector<std::size_t> config(n, 0);
    for (NodeId p : parents) {
        auto col = data.column(p);
        const std::size_t k = data.cardinality(p);
        for (std::size_t row = 0; row < n; ++row) config[row] = config[row] * k + col[row];
    }
    auto cc = data.column(child);
    for (std::size_t row = 0; row < n; ++row) ++counts[config[row] * r + cc[row]];

    const double a_j = ess / static_cast<double>(q);
    const double a_jk = a_j / static_cast<double>(r);
    const double lg_aj = log_gamma(a_j);
    const double lg_ajk = log_gamma(a_jk);
    double score = 0.0;
    for (std::size_t j = 0; j < q; ++j) {
        std::size_t nj = 0;
        for (std::size_t k = 0; k < r; ++k) {
            const std::uint32_t njk = counts[j * r + k];
            if (njk == 0) continue;
            nj += njk;
            score += log_gamma(a_jk + njk) - lg_ajk;
        }
        if (nj) score += lg_aj - log_gamma(a_j + static_cast<double>(nj));
    }
    return score;
}

double FamilyScorer::score(NodeId child, const NodeSet& parents) const {
    auto key = std::make_pair(child, parents);
    {
        std::shared_lock lock(mutex_);
        if (auto it = cache_.find(key); it != cache_.end()) return it->second;
    }
    const double s = bdeu_family_score(*data_, child, parents, ess_, max_cells_);
    std::unique_lock lock(mutex_);
    cache_.emplace(std::move(key), s);
    return s;
}

double FamilyScorer::structure_score(const NodeSet& nodes, const std::vector<std::pair<NodeId, NodeId>>& arcs) const {
    double total = 0.0;
    for (NodeId v : nodes) {
        std::vector<NodeId> pa;
        for (const auto& [p, c] : arcs)
            if (c == v) pa.push_back(p);
        total += score(v, make_set(std::move(pa)));
    }
    return total;
}

std::size_t FamilyScorer::cache_size() const {
    std::shared_lock lock(mutex_);
    return cache_.size();
}

// ---------------------------------------------------------------------------
// Order-conditional posteriors

OrderScorer::OrderScorer(const FamilyScorer& scorer, NodeSet nodes, const AveragingOptions& options)
    : nodes_(std::move(nodes)) {
    const std::size_t m = nodes_.size();
    if (m > 64) throw Error(ErrorKind::BudgetExceeded, "order scoring supports at most 64 nodes");
    if (options.max_parents < 1) throw Error(ErrorKind::InvalidInput, "max_parents must be >= 1");
    families_.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        std::vector<std::size_t> others;
        for (std::size_t j = 0; j < m; ++j)
            if (j != i) others.push_back(j);
        const std::size_t limit = std::min(options.max_parents, others.size());

        // Count admissible sets before scoring any of them.
        double total = 0.0, binom = 1.0;
        for (std::size_t s = 0; s <= limit; ++s) {
            total += binom;
            binom = binom * static_cast<double>(others.size() - s) / static_cast<double>(s + 1);
        }
        if (total > static_cast<double>(options.family_budget))
            throw Error(ErrorKind::BudgetExceeded, "child " + std::to_string(nodes_[i]) + " has " +
                                                      std::to_string(static_cast<long long>(total)) +
                                                      " candidate parent sets, budget " +
                                                      std::to_string(options.family_budget));

        std::vector<std::size_t> chosen;
        auto recurse = [&](auto&& self, std::size_t start) -> void {
            std::uint64_t mask = 0;
            NodeSet parents;
            for (std::size_t c : chosen) {
                mask |= std::uint64_t{1} << c;
                parents.push_back(nodes_[c]);
            }
            families_[i].push_back({mask, scorer.score(nodes_[i], parents)});
            if (chosen.size() == limit) return;
            for (std::size_t t = start; t < others.size(); ++t) {
                chosen.push_back(others[t]);
                self(self, t + 1);
                chosen.pop_back();
            }
        };
        recurse(recurse, 0);
    }
}

double OrderScorer::child_log_score(std::size_t i, std::uint64_t predecessors) const {
    double mx = -std::numeric_limits<double>::infinity();
    for (const auto& f : families_[i])
        if ((f.mask & ~predecessors) == 0) mx = std::max(mx, f.score);
    double s = 0.0;
    for (const auto& f : families_[i])
        if ((f.mask & ~predecessors) == 0) s += std::exp(f.score - mx);
    return mx + std::log(s);
}

double OrderScorer::log_order_score(const Order& order) const {
    double total = 0.0;
    std::uint64_t pred = 0;
    for (std::size_t i : order) {
        total += child_log_score(i, pred);
        pred |= std::uint64_t{1} << i;
    }
    return total;
}

EdgePosterior OrderScorer::edge_posterior(const Order& order) const {
    const std::size_t m = nodes_.size();
    EdgePosterior post(nodes_);
    std::uint64_t pred = 0;
    std::vector<double> acc(m);
    for (std::size_t i : order) {
        double mx = -std::numeric_limits<double>::infinity();
        for (const auto& f : families_[i])
            if ((f.mask & ~pred) == 0) mx = std::max(mx, f.score);
        double z = 0.0;
        std::fill(acc.begin(), acc.end(), 0.0);
        for (const auto& f : families_[i]) {
            if ((f.mask & ~pred) != 0) continue;
            const double w = std::exp(f.score - mx);
            z += w;
            for (std::uint64_t bits = f.mask; bits; bits &= bits - 1) acc[std::countr_zero(bits)] += w;
        }
        for (std::size_t j = 0; j < m; ++j)
            if (acc[j] > 0.0) post.at(j, i) = acc[j] / z;
        pred |= std::uint64_t{1} << i;
    }
    return post;
}

EdgePosterior feature_posterior_given_order(const FamilyScorer& scorer, const NodeSet& nodes, const Order& order,
                                            const AveragingOptions& options) {
    OrderScorer os(scorer, nodes, options);
    if (order.size() != nodes.size()) throw Error(ErrorKind::InvalidInput, "order length differs from node count");
    return os.edge_posterior(order);
}

McmcResult order_mcmc(const FamilyScorer& scorer, const NodeSet& nodes, const McmcOptions& mcmc,
                      const AveragingOptions& options) {
    if (mcmc.samples < 1) throw Error(ErrorKind::InvalidInput, "order_mcmc needs at least one kept sample");
    const std::size_t m = nodes.size();
    McmcResult result;
    result.posterior = EdgePosterior(nodes);
    if (m < 2) return result;

    OrderScorer os(scorer, nodes, options);
    const std::size_t burn_in = mcmc.burn_in ? mcmc.burn_in : 10 * m;
    const std::size_t thin = mcmc.thin ? mcmc.thin : m;

    Rng rng(mcmc.seed);
    Order order(m);
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = m - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);

    // term[p] is the score of the child at position p given its predecessors.
    std::vector<double> term(m);
    auto rescore = [&](std::size_t from, std::size_t to, std::vector<double>& out) {
        std::uint64_t pred = 0;
        for (std::size_t p = 0; p < from; ++p) pred |= std::uint64_t{1} << order[p];
        for (std::size_t p = from; p <= to; ++p) {
            out[p] = os.child_log_score(order[p], pred);
            pred |= std::uint64_t{1} << order[p];
        }
    };
    rescore(0, m - 1, term);

    std::vector<double> proposal(m);
    auto step = [&] {
        std::size_t a = rng.below(m);
        std::size_t b = rng.below(m - 1);
        if (b >= a) ++b;
        if (a > b) std::swap(a, b);
        std::swap(order[a], order[b]);
        std::copy(term.begin(), term.end(), proposal.begin());
        rescore(a, b, proposal);
        double delta = 0.0;
        for (std::size_t p = a; p <= b; ++p) delta += proposal[p] - term[p];
        ++result.proposals;
        if (delta >= 0.0 || std::log(rng.uniform()) < delta) {
            term.swap(proposal);
            ++result.accepted;
        } else {
            std::swap(order[a], order[b]);
        }
    };

    for (std::size_t s = 0; s < burn_in; ++s) step();
    for (std::size_t t = 0; t < mcmc.samples; ++t) {
        for (std::size_t s = 0; s < thin; ++s) step();
        const EdgePosterior post = os.edge_posterior(order);
        for (std::size_t k = 0; k < post.p.size(); ++k) result.posterior.p[k] += post.p[k];
    }
    for (double& x : result.posterior.p) x /= static_cast<double>(mcmc.samples);
    return result;
}

EdgePosterior exact_order_posterior(const FamilyScorer& scorer, const NodeSet& nodes,
                                    const AveragingOptions& options) {
    const std::size_t m = nodes.size();
    if (m > 9) throw Error(ErrorKind::BudgetExceeded, "exact order enumeration limited to 9 nodes");
    EdgePosterior result(nodes);
    if (m < 2) return result;
    OrderScorer os(scorer, nodes, options);
    Order order(m);
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> log_w;
    std::vector<EdgePosterior> posts;
    do {
        log_w.push_back(os.log_order_score(order));
        posts.push_back(os.edge_posterior(order));
    } while (std::next_permutation(order.begin(), order.end()));
    const double log_z = log_sum_exp(log_w);
    for (std::size_t o = 0; o < posts.size(); ++o) {
        const double w = std::exp(log_w[o] - log_z);
        for (std::size_t k = 0; k < result.p.size(); ++k) result.p[k] += w * posts[o].p[k];
    }
    return result;
}

LocalStructure threshold_edges(const EdgePosterior& post, double t_avg) {
    if (!(t_avg > 0.0 && t_avg < 1.0)) throw Error(ErrorKind::InvalidInput, "t_avg must be in (0, 1)");
    LocalStructure s;
    s.nodes = post.nodes;
    const std::size_t m = post.size();
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i + 1; j < m; ++j) {
            const double fwd = post.at(i, j), back = post.at(j, i);
            const bool f = fwd > t_avg, b = back > t_avg;
            if (f && (!b || fwd >= back))
                s.add_edge(post.nodes[i], post.nodes[j], fwd);
            else if (b)
                s.add_edge(post.nodes[j], post.nodes[i], back);
        }
    return s;
}

// ---------------------------------------------------------------------------
// Greedy hill climbing

LocalStructure greedy_learn(const FamilyScorer& scorer, const NodeSet& nodes, const AveragingOptions& options) {
    if (nodes.empty()) throw Error(ErrorKind::InvalidInput, "greedy_learn needs at least one node");
    const std::size_t m = nodes.size();
    std::vector<std::vector<bool>> arc(m, std::vector<bool>(m, false));
    std::vector<NodeSet> parents(m);
    std::vector<double> fam(m);
    for (std::size_t i = 0; i < m; ++i) fam[i] = scorer.score(nodes[i], {});

    auto reaches = [&](std::size_t from, std::size_t to, std::size_t skip_from, std::size_t skip_to) {
        std::vector<bool> seen(m, false);
        std::vector<std::size_t> stack{from};
        seen[from] = true;
        while (!stack.empty()) {
            const std::size_t u = stack.back();
            stack.pop_back();
            if (u == to) return true;
            for (std::size_t v = 0; v < m; ++v)
                if (arc[u][v] && !(u == skip_from && v == skip_to) && !seen[v]) {
                    seen[v] = true;
                    stack.push_back(v);
                }
        }
        return false;
    };
    auto with = [&](std::size_t child, std::size_t p) { return set_union(parents[child], {nodes[p]}); };
    auto without = [&](std::size_t child, std::size_t p) { return set_difference(parents[child], {nodes[p]}); };

    enum class Move { Add, Delete, Reverse };
    for (;;) {
        double best_delta = 1e-9;
        std::size_t bi = 0, bj = 0;
        Move best_move = Move::Add;
        bool found = false;
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j) {
                if (i == j) continue;
                if (arc[i][j]) {
                    const double del = scorer.score(nodes[j], without(j, i)) - fam[j];
                    if (del > best_delta) {
                        best_delta = del;
                        bi = i, bj = j, best_move = Move::Delete, found = true;
                    }
                    if (parents[i].size() < options.max_parents && !reaches(i, j, i, j)) {
                        const double rev = del + scorer.score(nodes[i], with(i, j)) - fam[i];
                        if (rev > best_delta) {
                            best_delta = rev;
                            bi = i, bj = j, best_move = Move::Reverse, found = true;
                        }
                    }
                } else if (!arc[j][i] && parents[j].size() < options.max_parents && !reaches(j, i, m, m)) {
                    const double add = scorer.score(nodes[j], with(j, i)) - fam[j];
                    if (add > best_delta) {
                        best_delta = add;
                        bi = i, bj = j, best_move = Move::Add, found = true;
                    }
                }
            }
        if (!found) break;
        switch (best_move) {
            case Move::Add:
                arc[bi][bj] = true;
                parents[bj] = with(bj, bi);
                fam[bj] = scorer.score(nodes[bj], parents[bj]);
                break;
            case Move::Delete:
                arc[bi][bj] = false;
                parents[bj] = without(bj, bi);
                fam[bj] = scorer.score(nodes[bj], parents[bj]);
                break;
            case Move::Reverse:
                arc[bi][bj] = false;
                parents[bj] = without(bj, bi);
                fam[bj] = scorer.score(nodes[bj], parents[bj]);
                arc[bj][bi] = true;
                parents[bi] = with(bi, bj);
                fam[bi] = scorer.score(nodes[bi], parents[bi]);
                break;
        }
    }

    LocalStructure s;
    s.nodes = nodes;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j)
            if (arc[i][j]) s.add_edge(nodes[i], nodes[j], 1.0);
    return s;
}

std::string to_string(LearnerKind kind) { return kind == LearnerKind::Greedy ? "greedy" : "modelavg"; }

LearnerKind parse_learner(const std::string& name) {
    if (name == "modelavg") return LearnerKind::ModelAveraging;
    if (name == "greedy") return LearnerKind::Greedy;
    throw Error(ErrorKind::InvalidInput, "unknown learner '" + name + "' (expected modelavg or greedy)");
}

LocalStructure learn_structure(const FamilyScorer& scorer, const NodeSet& nodes, const LearnerConfig& config,
                               std::uint64_t seed) {
    if (config.kind == LearnerKind::Greedy) return greedy_learn(scorer, nodes, config.averaging);
    LocalStructure s;
    s.nodes = nodes;
    if (nodes.size() < 2) return s;
    McmcOptions mcmc = config.mcmc;
    mcmc.seed = seed;
    return threshold_edges(order_mcmc(scorer, nodes, mcmc, config.averaging).posterior, config.t_avg);
}

}  // namespace lsbn
