#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "saferoute/graph.hpp"

namespace saferoute {

inline constexpr double kUnreachable = std::numeric_limits<double>::infinity();

struct ShortestPathResult {
    std::map<std::string, double> dist;        // cost from source; inf = unreachable
    std::map<std::string, std::string> previous;
    std::vector<std::string> path;             // source..target; empty when unreachable
    double total_cost = 0.0;
    std::string engine;
    double elapsed_seconds = 0.0;
    // Exact engines: number of settled/processed nodes. Q-learning: episodes.
    std::uint64_t settled_or_episodes = 0;
    // Dijkstra only: station ids in the order they were settled.
    std::vector<std::string> settled_order;

    bool found() const { return !path.empty(); }
};

// Binary-heap Dijkstra. Requires non-negative arc weights; a negative arc
// raises NegativeWeightError pointing at bellman_ford. Equal-cost ties pick
// the lexicographically smaller predecessor id.
ShortestPathResult dijkstra(const WeightedDigraph& g, const std::string& source,
                            const std::string& target);
ShortestPathResult dijkstra(const RouteGraph& g, const std::string& source,
                            const std::string& target);

// |V|-1 rounds of edge relaxation in sorted edge order, then one detection
// round: any further improvement raises NegativeCycleError. Same tie-break as
// dijkstra, so the two agree on paths, not just costs.
ShortestPathResult bellman_ford(const WeightedDigraph& g, const std::string& source,
                                const std::string& target);
ShortestPathResult bellman_ford(const RouteGraph& g, const std::string& source,
                                const std::string& target);

// Reward scheme for the Q-learning engine, indexed by station id:
//   connected (u,v):      -(edge weight)    i.e. -(safety * time)
//   disconnected / u==v:  -99
//   edge into the goal:   +100 (overrides the weight)
struct RewardMatrix {
    std::vector<std::string> ids;           // row/column order, sorted
    std::map<std::string, std::size_t> index;
    std::vector<std::vector<double>> reward;
    std::string goal;

    double at(const std::string& from, const std::string& to) const;
};

RewardMatrix build_reward_matrix(const WeightedDigraph& g, const std::string& goal);
RewardMatrix build_reward_matrix(const RouteGraph& g, const std::string& goal);

struct QLearningConfig {
    double learning_rate = 0.8;   // alpha in (0, 1]
    double discount = 0.8;        // gamma in (0, 1)
    double epsilon_start = 1.0;
    double epsilon_decay = 0.999; // multiplied per episode
    double epsilon_floor = 0.05;
    int episodes = 10000;
    std::uint64_t seed = 42;
    int max_steps_per_episode = 200;
    // When true, the agent may also attempt non-edges, collecting the -99
    // reward and staying put. Default keeps the action set to real edges.
    bool allow_invalid_actions = false;

    void validate() const;  // DomainError on out-of-range fields
};

struct QTable {
    std::vector<std::string> ids;
    std::map<std::string, std::size_t> index;
    std::vector<std::vector<double>> q;            // state x action
    std::vector<std::vector<std::uint64_t>> visits;

    double at(const std::string& s, const std::string& a) const;
};

// Greedy walk from source following argmax over valid actions, ties broken by
// the lowest station id. Raises NotConvergedError (carrying the partial path)
// if a state repeats before the goal.
std::vector<std::string> extract_path(const QTable& q, const WeightedDigraph& g,
                                      const std::string& source, const std::string& goal);

// Temporal-difference training over the reward matrix: episodes start at
// uniformly random non-goal states, actions are epsilon-greedy, and each
// episode ends at the goal or after max_steps. The returned path result is
// the greedy extraction from source, costed against the real edge weights.
std::pair<QTable, ShortestPathResult> q_learning(const WeightedDigraph& g,
                                                 const std::string& source,
                                                 const std::string& goal,
                                                 const QLearningConfig& cfg);
std::pair<QTable, ShortestPathResult> q_learning(const RouteGraph& g,
                                                 const std::string& source,
                                                 const std::string& goal,
                                                 const QLearningConfig& cfg);

// Sum of arc weights along a path already validated to exist edge by edge.
double path_cost(const WeightedDigraph& g, const std::vector<std::string>& path);

}  // namespace saferoute
