#include "saferoute/routing.hpp"

#include <algorithm>
#include <chrono>
#include <queue>
#include <random>

#include "saferoute/errors.hpp"

namespace saferoute {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

void check_endpoints(const WeightedDigraph& g, const std::string& source,
                     const std::string& target) {
    if (!g.has_node(source)) throw LookupError("unknown station id '" + source + "'");
    if (!g.has_node(target)) throw LookupError("unknown station id '" + target + "'");
}

// Rebuilds the source..target node list from the predecessor map.
std::vector<std::string> backtrack(const std::map<std::string, std::string>& previous,
                                   const std::string& source, const std::string& target) {
    std::vector<std::string> path;
    std::string cur = target;
    path.push_back(cur);
    while (cur != source) {
        // Zero-weight arcs between equal-cost nodes can make the
        // minimal-predecessor rule circular; refuse instead of walking it
        // forever. Strictly positive weights can never trip this.
        if (path.size() > previous.size() + 1) {
            throw DataError(
                "predecessor chain loops: zero-weight ties make the equal-cost "
                "tie-break ambiguous on this graph");
        }
        auto it = previous.find(cur);
        if (it == previous.end()) return {};  // unreachable
        cur = it->second;
        path.push_back(cur);
    }
    std::reverse(path.begin(), path.end());
    return path;
}

void finalize_result(ShortestPathResult& r, const WeightedDigraph& g,
                     const std::string& source, const std::string& target) {
    r.path = backtrack(r.previous, source, target);
    if (source == target) r.path = {source};
    r.total_cost = r.path.empty() ? kUnreachable : path_cost(g, r.path);
}

}  // namespace

double path_cost(const WeightedDigraph& g, const std::vector<std::string>& path) {
    double cost = 0.0;
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
        auto w = g.arc_weight(path[i], path[i + 1]);
        if (!w)
            throw LookupError("path uses a nonexistent segment " + path[i] + " -> " + path[i + 1]);
        cost += *w;
    }
    return cost;
}

ShortestPathResult dijkstra(const WeightedDigraph& g, const std::string& source,
                            const std::string& target) {
    auto t0 = Clock::now();
    check_endpoints(g, source, target);
    if (g.has_negative_arc())
        throw NegativeWeightError(
            "graph has a negative edge weight; dijkstra requires non-negative weights, "
            "use bellman_ford");

    ShortestPathResult r;
    r.engine = "dijkstra";
    for (const auto& id : g.node_ids()) r.dist[id] = kUnreachable;
    r.dist[source] = 0.0;

    using Entry = std::pair<double, std::string>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
    heap.emplace(0.0, source);
    std::map<std::string, bool> settled;

    while (!heap.empty()) {
        auto [d, u] = heap.top();
        heap.pop();
        if (settled[u]) continue;
        settled[u] = true;
        r.settled_order.push_back(u);

        for (const auto& arc : g.arcs_from(u)) {
            double nd = d + arc.weight;
            double& dv = r.dist[arc.to];
            if (nd < dv) {
                dv = nd;
                r.previous[arc.to] = u;
                heap.emplace(nd, arc.to);
            } else if (nd == dv) {
                // Equal cost: keep the lexicographically smaller predecessor.
                auto it = r.previous.find(arc.to);
                if (it != r.previous.end() && u < it->second) it->second = u;
            }
        }
    }

    r.settled_or_episodes = r.settled_order.size();
    finalize_result(r, g, source, target);
    r.elapsed_seconds = seconds_since(t0);
    return r;
}

ShortestPathResult bellman_ford(const WeightedDigraph& g, const std::string& source,
                                const std::string& target) {
    auto t0 = Clock::now();
    check_endpoints(g, source, target);

    // Deterministic relaxation order: edges sorted by (from, to). The
    // adjacency map is already sorted both ways.
    struct Edge {
        const std::string* from;
        const std::string* to;
        double w;
    };
    std::vector<Edge> edges;
    for (const auto& [from, arcs] : g.adjacency)
        for (const auto& arc : arcs) edges.push_back({&from, &arc.to, arc.weight});

    ShortestPathResult r;
    r.engine = "bellman-ford";
    for (const auto& id : g.node_ids()) r.dist[id] = kUnreachable;
    r.dist[source] = 0.0;

    const std::size_t rounds = g.node_count() > 0 ? g.node_count() - 1 : 0;
    for (std::size_t i = 0; i < rounds; ++i) {
        for (const auto& e : edges) {
            double du = r.dist[*e.from];
            if (du == kUnreachable) continue;
            double nd = du + e.w;
            double& dv = r.dist[*e.to];
            if (nd < dv) {
                dv = nd;
                r.previous[*e.to] = *e.from;
            } else if (nd == dv) {
                auto it = r.previous.find(*e.to);
                if (it != r.previous.end() && *e.from < it->second) it->second = *e.from;
            }
        }
    }

    // Detection round: a further strict improvement means a negative cycle.
    // Equal-cost predecessor updates still apply, which pins the same
    // minimal-predecessor tree dijkstra produces.
    for (const auto& e : edges) {
        double du = r.dist[*e.from];
        if (du == kUnreachable) continue;
        double nd = du + e.w;
        double dv = r.dist[*e.to];
        if (nd < dv) throw NegativeCycleError();
        if (nd == dv) {
            auto it = r.previous.find(*e.to);
            if (it != r.previous.end() && *e.from < it->second) it->second = *e.from;
        }
    }

    std::uint64_t reached = 0;
    for (const auto& [_, d] : r.dist)
        if (d != kUnreachable) ++reached;
    r.settled_or_episodes = reached;
    finalize_result(r, g, source, target);
    r.elapsed_seconds = seconds_since(t0);
    return r;
}

double RewardMatrix::at(const std::string& from, const std::string& to) const {
    return reward[index.at(from)][index.at(to)];
}

RewardMatrix build_reward_matrix(const WeightedDigraph& g, const std::string& goal) {
    if (!g.has_node(goal)) throw LookupError("unknown goal station '" + goal + "'");

    RewardMatrix m;
    m.goal = goal;
    m.ids = g.node_ids();
    for (std::size_t i = 0; i < m.ids.size(); ++i) m.index[m.ids[i]] = i;

    const std::size_t n = m.ids.size();
    m.reward.assign(n, std::vector<double>(n, -99.0));
    for (const auto& [from, arcs] : g.adjacency) {
        std::size_t i = m.index[from];
        for (const auto& arc : arcs) {
            std::size_t j = m.index.at(arc.to);
            if (i == j) continue;  // diagonal stays -99: no self-loops
            m.reward[i][j] = (arc.to == goal) ? 100.0 : -arc.weight;
        }
    }
    return m;
}

double QTable::at(const std::string& s, const std::string& a) const {
    return q[index.at(s)][index.at(a)];
}

void QLearningConfig::validate() const {
    if (!(learning_rate > 0.0 && learning_rate <= 1.0))
        throw DomainError("learning rate must be in (0, 1]");
    if (!(discount > 0.0 && discount < 1.0))
        throw DomainError("discount must be in (0, 1)");
    if (epsilon_start < 0.0 || epsilon_start > 1.0 || epsilon_floor < 0.0 ||
        epsilon_floor > 1.0 || !(epsilon_decay > 0.0 && epsilon_decay <= 1.0))
        throw DomainError("epsilon schedule out of range");
    if (episodes <= 0 || max_steps_per_episode <= 0)
        throw DomainError("episodes and max_steps_per_episode must be positive");
}

namespace {

// Indexed action view of the graph used by the trainer and the extractor.
struct ActionSets {
    std::vector<std::vector<std::size_t>> valid;  // per state, sorted by id

    ActionSets(const WeightedDigraph& g, const std::vector<std::string>& ids,
               const std::map<std::string, std::size_t>& index) {
        valid.resize(ids.size());
        for (std::size_t i = 0; i < ids.size(); ++i)
            for (const auto& arc : g.arcs_from(ids[i]))
                valid[i].push_back(index.at(arc.to));  // arcs sorted by id already
    }
};

// Argmax over the given actions; ties pick the first (lowest id, since the
// action list is sorted).
std::size_t greedy_action(const std::vector<double>& qrow,
                          const std::vector<std::size_t>& actions) {
    std::size_t best = actions.front();
    for (std::size_t a : actions)
        if (qrow[a] > qrow[best]) best = a;
    return best;
}

}  // namespace

std::vector<std::string> extract_path(const QTable& q, const WeightedDigraph& g,
                                      const std::string& source, const std::string& goal) {
    check_endpoints(g, source, goal);
    ActionSets actions(g, q.ids, q.index);

    std::vector<bool> visited(q.ids.size(), false);
    std::vector<std::string> path;
    std::size_t cur = q.index.at(source);
    std::size_t goal_i = q.index.at(goal);
    path.push_back(q.ids[cur]);
    visited[cur] = true;

    while (cur != goal_i) {
        if (actions.valid[cur].empty())
            throw NotConvergedError("greedy policy reached a dead end at '" + q.ids[cur] + "'",
                                    path);
        std::size_t next = greedy_action(q.q[cur], actions.valid[cur]);
        if (visited[next])
            throw NotConvergedError("greedy policy revisited '" + q.ids[next] +
                                        "' before the goal; policy not converged "
                                        "(consider more episodes)",
                                    path);
        path.push_back(q.ids[next]);
        visited[next] = true;
        cur = next;
    }
    return path;
}

std::pair<QTable, ShortestPathResult> q_learning(const WeightedDigraph& g,
                                                 const std::string& source,
                                                 const std::string& goal,
                                                 const QLearningConfig& cfg) {
    auto t0 = Clock::now();
    cfg.validate();
    check_endpoints(g, source, goal);

    RewardMatrix rewards = build_reward_matrix(g, goal);
    const std::size_t n = rewards.ids.size();

    QTable table;
    table.ids = rewards.ids;
    table.index = rewards.index;
    table.q.assign(n, std::vector<double>(n, 0.0));
    table.visits.assign(n, std::vector<std::uint64_t>(n, 0));

    ActionSets actions(g, table.ids, table.index);
    std::vector<std::size_t> all_actions(n);
    for (std::size_t i = 0; i < n; ++i) all_actions[i] = i;

    const std::size_t goal_i = table.index.at(goal);
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    // Episode starts are uniform over non-goal states with at least one action.
    std::vector<std::size_t> starts;
    for (std::size_t i = 0; i < n; ++i)
        if (i != goal_i && (cfg.allow_invalid_actions || !actions.valid[i].empty()))
            starts.push_back(i);
    if (starts.empty()) throw DataError("no usable start states for q-learning");
    std::uniform_int_distribution<std::size_t> start_dist(0, starts.size() - 1);

    double epsilon = cfg.epsilon_start;
    for (int ep = 0; ep < cfg.episodes; ++ep) {
        std::size_t s = starts[start_dist(rng)];
        for (int step = 0; step < cfg.max_steps_per_episode && s != goal_i; ++step) {
            const auto& acts = cfg.allow_invalid_actions ? all_actions : actions.valid[s];
            if (acts.empty()) break;  // dead end, episode over
            std::size_t a;
            if (unit(rng) < epsilon) {
                std::uniform_int_distribution<std::size_t> pick(0, acts.size() - 1);
                a = acts[pick(rng)];
            } else {
                a = greedy_action(table.q[s], acts);
            }

            double reward = rewards.reward[s][a];
            bool is_edge = !actions.valid[s].empty() &&
                           std::binary_search(actions.valid[s].begin(),
                                              actions.valid[s].end(), a);
            std::size_t s_next = is_edge ? a : s;  // invalid attempts stay put

            double best_next = 0.0;
            if (s_next != goal_i) {
                const auto& next_acts =
                    cfg.allow_invalid_actions ? all_actions : actions.valid[s_next];
                if (!next_acts.empty())
                    best_next = table.q[s_next][greedy_action(table.q[s_next], next_acts)];
            }

            double& qv = table.q[s][a];
            qv += cfg.learning_rate * (reward + cfg.discount * best_next - qv);
            ++table.visits[s][a];
            s = s_next;
        }
        epsilon = std::max(cfg.epsilon_floor, epsilon * cfg.epsilon_decay);
    }

    ShortestPathResult r;
    r.engine = "q-learning";
    r.settled_or_episodes = static_cast<std::uint64_t>(cfg.episodes);
    r.path = (source == goal) ? std::vector<std::string>{source}
                              : extract_path(table, g, source, goal);
    r.total_cost = path_cost(g, r.path);
    double acc = 0.0;
    r.dist[r.path.front()] = 0.0;
    for (std::size_t i = 0; i + 1 < r.path.size(); ++i) {
        acc += *g.arc_weight(r.path[i], r.path[i + 1]);
        r.dist[r.path[i + 1]] = acc;
        r.previous[r.path[i + 1]] = r.path[i];
    }
    r.elapsed_seconds = seconds_since(t0);
    return {std::move(table), std::move(r)};
}

ShortestPathResult dijkstra(const RouteGraph& g, const std::string& source,
                            const std::string& target) {
    return dijkstra(g.to_weighted(), source, target);
}

ShortestPathResult bellman_ford(const RouteGraph& g, const std::string& source,
                                const std::string& target) {
    return bellman_ford(g.to_weighted(), source, target);
}

RewardMatrix build_reward_matrix(const RouteGraph& g, const std::string& goal) {
    return build_reward_matrix(g.to_weighted(), goal);
}

std::pair<QTable, ShortestPathResult> q_learning(const RouteGraph& g,
                                                 const std::string& source,
                                                 const std::string& goal,
                                                 const QLearningConfig& cfg) {
    return q_learning(g.to_weighted(), source, goal, cfg);
}

}  // namespace saferoute
