// SPDX-License-Identifier: Apache-2.0
//
// Fixed-depth parse tree template miner (Drain). Messages are split on
// whitespace, tokens containing a digit are masked to the wildcard before
// descent, and the tree is keyed by token count and then by the leading
// tokens. Leaves hold template clusters compared by token similarity.
#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "multilog/common.hpp"
#include "multilog/dataset.hpp"

namespace multilog {

inline constexpr std::string_view kWildcard = "[*]";

struct DrainConfig {
    /// Total tree depth including the root and the leaf layer.
    int depth = 4;
    double similarity_threshold = 0.5;
    std::size_t max_children = 100;
};

struct EventTemplate {
    EventId id = 0;
    std::vector<std::string> tokens;
    std::size_t count = 0;

    std::string text() const;
};

class TemplateRegistry {
public:
    explicit TemplateRegistry(DrainConfig cfg = {});
    TemplateRegistry(TemplateRegistry&&) noexcept = default;
    TemplateRegistry& operator=(TemplateRegistry&&) noexcept = default;

    /// Returns the matching template id, learning a new template when unfrozen.
    /// On a frozen registry an unmatched message maps to oov_id().
    EventId parse_line(std::string_view message);

    /// Match without mutation; nullopt when nothing clears the threshold.
    std::optional<EventId> match(std::string_view message) const;

    void freeze() { frozen_ = true; }
    bool frozen() const { return frozen_; }

    std::size_t size() const { return templates_.size(); }
    const std::vector<EventTemplate>& templates() const { return templates_; }
    const EventTemplate& at(EventId id) const { return templates_.at(id); }

    /// Reserved ids; only meaningful once frozen.
    EventId oov_id() const { return static_cast<EventId>(templates_.size()); }
    EventId pad_id() const { return static_cast<EventId>(templates_.size() + 1); }

    const DrainConfig& config() const { return cfg_; }

    /// "<id>\t<tokens>" per line, ids ascending.
    void save(const std::filesystem::path& path) const;
    /// Rebuilds the tree by re-inserting templates in id order; result is frozen.
    static TemplateRegistry load(const std::filesystem::path& path, DrainConfig cfg = {});

    /// Whitespace tokens with digit-bearing tokens replaced by the wildcard.
    static std::vector<std::string> tokenize(std::string_view message);

private:
    struct Node {
        std::map<std::string, std::unique_ptr<Node>, std::less<>> children;
        std::vector<EventId> clusters;
    };

    const Node* find_leaf(const std::vector<std::string>& tokens) const;
    Node& leaf_for_insert(const std::vector<std::string>& tokens);
    std::optional<EventId> best_match(const Node& leaf, const std::vector<std::string>& tokens) const;
    EventId add_template(std::vector<std::string> tokens);

    DrainConfig cfg_;
    std::map<std::size_t, std::unique_ptr<Node>> by_length_;
    std::vector<EventTemplate> templates_;
    bool frozen_ = false;
};

/// Per-node event stream after parsing.
struct NodeEvents {
    std::vector<TimestampMs> ts;
    std::vector<EventId> events;
};

/// Parses every entry with a (normally frozen) registry.
std::vector<NodeEvents> assign_events(TemplateRegistry& registry, const ClusterDataset& ds);

/// Mines templates from entries with ts < cutoff (node-major order) and freezes.
TemplateRegistry mine_templates(const ClusterDataset& ds, TimestampMs cutoff, DrainConfig cfg = {});

}  // namespace multilog
