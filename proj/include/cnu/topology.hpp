#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cnu/model.hpp"

namespace cnu {

struct GeoPoint {
    double lat = 0.0;  // degrees
    double lon = 0.0;
};

constexpr double kEarthRadiusKm = 6371.0;

/// Great-circle distance on a sphere of radius kEarthRadiusKm.
double haversine_km(GeoPoint a, GeoPoint b);

/// In-memory form of topology.json:
///   {"nodes":   [{"id": "...", "lat": 40.7, "lon": -74.0}],
///    "links":   [{"a": "...", "b": "...", "delay_ns": 1000}],
///    "ingress": [{"node": "...", "label": "..."}]}
/// lat/lon and delay_ns are optional; an ingress entry may also be a bare
/// node id, which then doubles as the label.
struct TopologyFile {
    struct Node {
        std::string id;
        std::optional<GeoPoint> location;
    };
    struct LinkSpec {
        std::string a;
        std::string b;
        std::optional<Nanos> delay;
    };
    struct Ingress {
        std::string node;
        std::string label;
    };

    std::vector<Node> nodes;
    std::vector<LinkSpec> links;
    std::vector<Ingress> ingress;

    /// Unique ids, links and ingress entries naming existing nodes. Throws
    /// std::invalid_argument.
    void validate() const;
};

TopologyFile parse_topology(std::string_view json_text);
TopologyFile read_topology(const std::filesystem::path& path);

enum class LinkDelayMode { Constant, Exponential };

struct GeoDelayOptions {
    double us_per_km = 5.0;
    LinkDelayMode mode = LinkDelayMode::Constant;
    /// Exponential links are truncated at cap_factor * mean.
    double cap_factor = 10.0;
};

/// Link delay = beeline distance * propagation, unless the link overrides
/// it. In exponential mode the derived delay becomes the mean. Throws
/// std::invalid_argument naming a link with neither coordinates nor delay.
Network load_topology(const TopologyFile& file, const GeoDelayOptions& options = {});

/// 2n/3 leaves ("leaf1"...) and n/3 spines ("spine1"...), each leaf linked
/// to every spine, each leaf with one ingress port labelled "<leaf>-in".
/// Throws std::invalid_argument unless n is a positive multiple of 3.
Network leaf_spine(std::size_t n, const DelayModel& link_delay = ConstantDelay{});

// ---------------------------------------------------------------------------
// Paths and path updates.

using Path = std::vector<SwitchId>;

/// Path from switch names; throws if a name is unknown.
Path resolve_path(const Network& net, const std::vector<std::string>& names);

/// Sum of the links' upper bounds (or means) along the path.
Nanos path_delay_bound(const Network& net, const Path& path);
Nanos path_delay_mean(const Network& net, const Path& path);

/// Rules that carry `flow` along `path` with version tag `tag`: the ingress
/// stamps the tag on untagged packets through a tag-wildcard rule, every hop
/// forwards packets carrying `tag` on, the last hop delivers them. Returned
/// per hop, in path order.
struct RouteRules {
    SwitchId sw;
    std::map<RuleKey, Action> tagged;    // keyed by `tag`
    std::map<RuleKey, Action> wildcard;  // ingress stamp
};
std::vector<RouteRules> route_rules(const Network& net, const TestFlow& flow, const Path& path, VersionTag tag);

/// Writes the route's rules into `state` as generation Old.
void install_route(ForwardingState& state, const Network& net, const TestFlow& flow, const Path& path,
                   VersionTag tag);

/// Two-phase path change with garbage collection: phase 1 installs the
/// new-tag rules on every switch of new_path, phase 2 makes the ingress stamp
/// the new tag, phase 3 removes the old-tag rules along old_path. Throws
/// std::invalid_argument if the paths differ in ingress or egress.
UpdateProcedure update_for_path_change(const Network& net, const TestFlow& flow, const Path& old_path,
                                       const Path& new_path, VersionTag old_tag = VersionTag{1},
                                       VersionTag new_tag = VersionTag{2});

enum class ProcedureKind { Ordered, TwoPhase, TwoPhaseGc };

/// Procedure plus gc phase set for one flow. Ordered updates keep the tag,
/// rewrite switches from egress back to ingress one phase each, then remove
/// rules only the old path used in a final gc phase.
UpdatePlan path_change_plan(ProcedureKind kind, const Network& net, const TestFlow& flow, const Path& old_path,
                            const Path& new_path, VersionTag old_tag = VersionTag{1},
                            VersionTag new_tag = VersionTag{2});

/// Combines per-flow plans into one: non-gc phases merge by index, gc phases
/// (which must be each plan's last phase) merge into one final phase.
/// Updates of the same switch, phase and mode are fused into one singleton.
UpdatePlan merge_plans(const std::vector<UpdatePlan>& plans);

struct FlowRoute {
    TestFlow flow;
    Path old_path;
    Path new_path;
};

/// One flow per leaf: leaf i -> spine (i mod S) -> leaf (i+1 mod L), old and
/// new paths identical (label-only change). A two-phase update with GC over
/// these touches all n switches in phase 1, the 2n/3 leaves in phase 2 and
/// all n switches in GC.
std::vector<FlowRoute> leaf_spine_routes(const Network& net, double rate_pps);

}  // namespace cnu
