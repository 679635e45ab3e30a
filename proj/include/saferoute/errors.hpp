#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace saferoute {

// Malformed or inconsistent input files (bad CSV, dangling stop names, ...).
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Argument outside its mathematical domain (negative safety, lambda <= 0, ...).
class DomainError : public std::invalid_argument {
public:
    explicit DomainError(const std::string& what) : std::invalid_argument(what) {}
};

// Lookup of an id that does not exist in the graph or series set.
class LookupError : public std::out_of_range {
public:
    explicit LookupError(const std::string& what) : std::out_of_range(what) {}
};

// Bellman-Ford found a cycle whose total weight is negative.
class NegativeCycleError : public std::runtime_error {
public:
    NegativeCycleError() : std::runtime_error("negative cycle exists") {}
};

// Dijkstra was handed a graph with at least one negative edge weight.
class NegativeWeightError : public std::runtime_error {
public:
    explicit NegativeWeightError(const std::string& what) : std::runtime_error(what) {}
};

// Greedy extraction from a Q-table revisited a state before reaching the goal.
// Carries the partial path walked so far; the caller may raise the episode count.
class NotConvergedError : public std::runtime_error {
public:
    NotConvergedError(const std::string& what, std::vector<std::string> partial)
        : std::runtime_error(what), partial_path(std::move(partial)) {}

    std::vector<std::string> partial_path;
};

// A model fit failed (divergence, degenerate data, ...).
class FitError : public std::runtime_error {
public:
    explicit FitError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace saferoute
