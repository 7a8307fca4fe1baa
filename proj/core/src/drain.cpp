// SPDX-License-Identifier: Apache-2.0
#include "multilog/drain.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include <fmt/core.h>

#include "multilog/text.hpp"

namespace multilog {

namespace {

bool has_digit(std::string_view token) {
    return std::any_of(token.begin(), token.end(),
                       [](unsigned char c) { return std::isdigit(c) != 0; });
}

struct Similarity {
    double score = 0.0;
    std::size_t params = 0;
};

Similarity similarity(const std::vector<std::string>& tmpl, const std::vector<std::string>& tokens) {
    Similarity s;
    std::size_t same = 0;
    for (std::size_t i = 0; i < tmpl.size(); ++i) {
        if (tmpl[i] == kWildcard) {
            ++s.params;
        } else if (tmpl[i] == tokens[i]) {
            ++same;
        }
    }
    s.score = static_cast<double>(same) / static_cast<double>(tmpl.size());
    return s;
}

}  // namespace

std::string EventTemplate::text() const {
    return join(tokens, " ");
}

TemplateRegistry::TemplateRegistry(DrainConfig cfg) : cfg_(cfg) {
    if (cfg_.depth < 3) throw Error("drain depth must be at least 3");
    if (cfg_.max_children < 2) throw Error("drain max_children must be at least 2");
}

std::vector<std::string> TemplateRegistry::tokenize(std::string_view message) {
    auto tokens = split_whitespace(message);
    for (auto& t : tokens) {
        if (has_digit(t)) t = std::string(kWildcard);
    }
    return tokens;
}

const TemplateRegistry::Node* TemplateRegistry::find_leaf(const std::vector<std::string>& tokens) const {
    const auto it = by_length_.find(tokens.size());
    if (it == by_length_.end()) return nullptr;
    const Node* node = it->second.get();
    const std::size_t layers = std::min<std::size_t>(cfg_.depth - 2, tokens.size());
    for (std::size_t i = 0; i < layers; ++i) {
        auto child = node->children.find(tokens[i]);
        if (child == node->children.end()) child = node->children.find(kWildcard);
        if (child == node->children.end()) return nullptr;
        node = child->second.get();
    }
    return node;
}

TemplateRegistry::Node& TemplateRegistry::leaf_for_insert(const std::vector<std::string>& tokens) {
    auto& root = by_length_[tokens.size()];
    if (!root) root = std::make_unique<Node>();
    Node* node = root.get();
    const std::size_t layers = std::min<std::size_t>(cfg_.depth - 2, tokens.size());
    for (std::size_t i = 0; i < layers; ++i) {
        auto& children = node->children;
        std::string key = tokens[i];
        if (!children.contains(key)) {
            const bool has_wild = children.contains(kWildcard);
            if (key != kWildcard) {
                if (has_wild) {
                    if (children.size() >= cfg_.max_children) key = kWildcard;
                } else if (children.size() + 1 >= cfg_.max_children) {
                    key = kWildcard;
                }
            }
        }
        auto& child = children[key];
        if (!child) child = std::make_unique<Node>();
        node = child.get();
    }
    return *node;
}

std::optional<EventId> TemplateRegistry::best_match(const Node& leaf,
                                                    const std::vector<std::string>& tokens) const {
    std::optional<EventId> best;
    Similarity best_sim{-1.0, 0};
    for (EventId id : leaf.clusters) {
        const auto s = similarity(templates_[id].tokens, tokens);
        if (s.score > best_sim.score ||
            (s.score == best_sim.score && s.params > best_sim.params)) {
            best_sim = s;
            best = id;
        }
    }
    if (best && best_sim.score >= cfg_.similarity_threshold) return best;
    return std::nullopt;
}

std::optional<EventId> TemplateRegistry::match(std::string_view message) const {
    const auto tokens = tokenize(message);
    if (tokens.empty()) return std::nullopt;
    const Node* leaf = find_leaf(tokens);
    if (!leaf) return std::nullopt;
    return best_match(*leaf, tokens);
}

EventId TemplateRegistry::add_template(std::vector<std::string> tokens) {
    Node& leaf = leaf_for_insert(tokens);
    const auto id = static_cast<EventId>(templates_.size());
    templates_.push_back(EventTemplate{id, std::move(tokens), 0});
    leaf.clusters.push_back(id);
    return id;
}

EventId TemplateRegistry::parse_line(std::string_view message) {
    auto tokens = tokenize(message);
    if (tokens.empty()) return oov_id();
    if (const Node* leaf = find_leaf(tokens)) {
        if (auto id = best_match(*leaf, tokens)) {
            if (!frozen_) {
                auto& t = templates_[*id];
                for (std::size_t i = 0; i < t.tokens.size(); ++i) {
                    if (t.tokens[i] != tokens[i]) t.tokens[i] = std::string(kWildcard);
                }
                ++t.count;
            }
            return *id;
        }
    }
    if (frozen_) return oov_id();
    const EventId id = add_template(std::move(tokens));
    templates_[id].count = 1;
    return id;
}

void TemplateRegistry::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(fmt::format("cannot write registry {}", path.string()));
    for (const auto& t : templates_) out << t.id << '\t' << t.text() << '\n';
    if (!out) throw Error(fmt::format("write failed for {}", path.string()));
}

TemplateRegistry TemplateRegistry::load(const std::filesystem::path& path, DrainConfig cfg) {
    std::ifstream in(path);
    if (!in) throw Error(fmt::format("cannot read registry {}", path.string()));
    TemplateRegistry reg(cfg);
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos) {
            throw Error(fmt::format("{}: row {}: missing tab separator", path.string(), row));
        }
        const std::string id_text(trim(std::string_view(line).substr(0, tab)));
        if (id_text != std::to_string(reg.templates_.size())) {
            throw Error(fmt::format("{}: row {}: expected id {}, found '{}'", path.string(), row,
                                    reg.templates_.size(), id_text));
        }
        auto tokens = split_whitespace(std::string_view(line).substr(tab + 1));
        if (tokens.empty()) {
            throw Error(fmt::format("{}: row {}: empty template", path.string(), row));
        }
        reg.add_template(std::move(tokens));
    }
    reg.freeze();
    return reg;
}

std::vector<NodeEvents> assign_events(TemplateRegistry& registry, const ClusterDataset& ds) {
    std::vector<NodeEvents> out(ds.n_nodes);
    for (std::size_t n = 0; n < ds.n_nodes; ++n) {
        const auto& entries = ds.entries[n];
        out[n].ts.reserve(entries.size());
        out[n].events.reserve(entries.size());
        for (const auto& e : entries) {
            out[n].ts.push_back(e.ts);
            out[n].events.push_back(registry.parse_line(e.message));
        }
    }
    return out;
}

TemplateRegistry mine_templates(const ClusterDataset& ds, TimestampMs cutoff, DrainConfig cfg) {
    TemplateRegistry reg(cfg);
    for (const auto& node : ds.entries) {
        for (const auto& e : node) {
            if (e.ts >= cutoff) break;
            reg.parse_line(e.message);
        }
    }
    reg.freeze();
    return reg;
}

}  // namespace multilog
