// Graphviz export. Output is a pure function of the graph: nodes in NodeId
// order, edges in creation order.

#pragma once

#include <string>

#include "gpe/graph.hpp"

namespace gpe {

namespace detail {

inline std::string dot_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out += c;
  }
  return out;
}

inline std::string dot_label(const Node& n) {
  switch (n.kind) {
    case NodeKind::Do: return "Do\n" + n.op;
    case NodeKind::Value:
      if (auto v = std::get_if<Value>(&n.value)) return format_value(*v);
      return "n" + std::to_string(std::get<OutputRef>(n.value).do_node) + "." + std::get<OutputRef>(n.value).param;
    case NodeKind::Cond: {
      std::string label = "if " + format_formula(n.formula);
      if (n.taken) label += "\n[" + std::string(branch_name(*n.taken)) + "]";
      return label;
    }
    case NodeKind::Tree: return "tree";
  }
  return {};
}

inline std::string dot_attrs(const Node& n) {
  std::string shape;
  switch (n.kind) {
    case NodeKind::Do: shape = "box"; break;
    case NodeKind::Value: shape = "ellipse"; break;
    case NodeKind::Cond: shape = "diamond"; break;
    case NodeKind::Tree: shape = "folder"; break;
  }
  std::string style;
  switch (n.status) {
    case NodeStatus::Invoked:
    case NodeStatus::Evaluated:
    case NodeStatus::Spliced: style = ", style=solid"; break;
    case NodeStatus::OnPathPending: style = ", style=dashed"; break;
    case NodeStatus::Unexecutable: style = ", color=gray, fontcolor=gray"; break;
    default: break;
  }
  return "shape=" + shape + style;
}

}  // namespace detail

inline std::string export_dot(const ProgramGraph& g) {
  std::string out = "digraph program {\n  rankdir=LR;\n";
  for (const Node& n : g.nodes())
    out += "  n" + std::to_string(n.id) + " [label=\"" + detail::dot_escape(detail::dot_label(n)) + "\", " +
           detail::dot_attrs(n) + "];\n";
  for (const Node& n : g.nodes()) {
    if (n.kind != NodeKind::Tree || n.status != NodeStatus::Unexecuted) continue;
    out += "  subgraph cluster_n" + std::to_string(n.id) + " {\n    label=\"unexecuted n" + std::to_string(n.id) +
           "\";\n    style=dashed;\n    n" + std::to_string(n.id) + ";\n";
    for (NodeId m : n.members) out += "    n" + std::to_string(m) + ";\n";
    out += "  }\n";
  }
  for (const Edge& e : g.edges()) {
    struct Printer {
      std::string operator()(const ArgEdge& a) const {
        return "n" + std::to_string(a.node) + " -> n" + std::to_string(a.value) + " [label=\"" + detail::dot_escape(a.role) + "\"]";
      }
      std::string operator()(const OutEdge& o) const {
        return "n" + std::to_string(o.do_node) + " -> n" + std::to_string(o.value) + " [label=\"" +
               detail::dot_escape(o.param) + "\", arrowhead=empty]";
      }
      std::string operator()(const NextEdge& x) const {
        return "n" + std::to_string(x.prev) + " -> n" + std::to_string(x.next) + " [style=bold, weight=10]";
      }
      std::string operator()(const BranchEdge& b) const {
        return "n" + std::to_string(b.cond) + " -> n" + std::to_string(b.tree) + " [label=\"" +
               std::string(branch_name(b.which)) + "\"]";
      }
      std::string operator()(const TreeMemberEdge& t) const {
        return "n" + std::to_string(t.root) + " -> n" + std::to_string(t.member) + " [label=\"" +
               std::to_string(t.position) + "\", arrowhead=none]";
      }
      std::string operator()(const ExtraEdge& x) const {
        return "n" + std::to_string(x.src) + " -> n" + std::to_string(x.dst) + " [label=\"" + detail::dot_escape(x.label) +
               "\", style=dotted, constraint=false]";
      }
    };
    out += "  " + std::visit(Printer{}, e) + ";\n";
  }
  out += "}\n";
  return out;
}

}  // namespace gpe
