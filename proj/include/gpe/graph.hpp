// Program graphs: Do hubs, values, conditionals and unexecuted trees, plus the
// domain-independent construction API whose calls invoke domain operations.

#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <variant>
#include <vector>

#include "gpe/error.hpp"
#include "gpe/schema.hpp"
#include "gpe/value.hpp"
#include "gpe/world.hpp"

namespace gpe {

using NodeId = std::size_t;

enum class NodeKind { Do, Value, Cond, Tree };

enum class NodeStatus {
  Detached,
  OnPathPending,
  Invoked,
  InTree,
  Unexecutable,
  Evaluated,  // conditionals only
  Unexecuted,  // tree roots only
  Spliced,  // tree roots only
};

enum class Branch { Then, Else };

inline std::string_view status_name(NodeStatus s) {
  switch (s) {
    case NodeStatus::Detached: return "Detached";
    case NodeStatus::OnPathPending: return "OnPathPending";
    case NodeStatus::Invoked: return "Invoked";
    case NodeStatus::InTree: return "InTree";
    case NodeStatus::Unexecutable: return "Unexecutable";
    case NodeStatus::Evaluated: return "Evaluated";
    case NodeStatus::Unexecuted: return "Unexecuted";
    case NodeStatus::Spliced: return "Spliced";
  }
  return "?";
}

inline std::string_view branch_name(Branch b) { return b == Branch::Then ? "then" : "else"; }

// Statuses only move forward; anything not listed here is a regression.
inline bool transition_allowed(NodeKind kind, NodeStatus from, NodeStatus to) {
  using S = NodeStatus;
  switch (kind) {
    case NodeKind::Do:
      return (from == S::Detached && (to == S::OnPathPending || to == S::InTree || to == S::Invoked)) ||
             (from == S::OnPathPending && to == S::Invoked) ||
             (from == S::InTree && (to == S::Invoked || to == S::Unexecutable));
    case NodeKind::Cond:
      return (from == S::Detached && (to == S::Evaluated || to == S::InTree)) ||
             (from == S::InTree && (to == S::Evaluated || to == S::Unexecutable));
    case NodeKind::Tree: return from == S::Unexecuted && to == S::Spliced;
    case NodeKind::Value: return false;
  }
  return false;
}

struct OutputRef {
  NodeId do_node = 0;
  std::string param;
  friend auto operator<=>(const OutputRef&, const OutputRef&) = default;
};

using NodeValue = std::variant<Value, OutputRef>;

struct Node {
  NodeId id = 0;
  NodeKind kind = NodeKind::Value;
  NodeStatus status = NodeStatus::Detached;
  std::string op;  // Do
  NodeValue value;  // Value
  Formula formula;  // Cond
  std::optional<Branch> taken;  // Cond, once evaluated

  // Adjacency, mirrored by the edge list.
  std::vector<std::pair<std::string, NodeId>> args;  // Do/Cond, in binding order
  std::map<std::string, NodeId> outs;  // Do, once invoked
  std::array<std::optional<NodeId>, 2> branches;  // Cond: then, else
  std::vector<NodeId> members;  // Tree
  std::optional<NodeId> owner_cond;  // Tree attached as a branch
  std::optional<NodeId> tree;  // Do/Cond that is a tree member
  std::optional<std::size_t> log_index;  // Do, once invoked

  std::optional<NodeId> arg(std::string_view role) const {
    for (const auto& [r, v] : args)
      if (r == role) return v;
    return std::nullopt;
  }
};

struct ArgEdge { NodeId node; std::string role; NodeId value; };
struct OutEdge { NodeId do_node; std::string param; NodeId value; };
struct NextEdge { NodeId prev; NodeId next; };
struct BranchEdge { NodeId cond; Branch which; NodeId tree; };
struct TreeMemberEdge { NodeId root; NodeId member; std::size_t position; };
struct ExtraEdge { NodeId src; NodeId dst; std::string label; };

using Edge = std::variant<ArgEdge, OutEdge, NextEdge, BranchEdge, TreeMemberEdge, ExtraEdge>;

struct Invocation {
  NodeId node = 0;
  Binding inputs;
  Binding outputs;
};

struct InvocationOutcome {
  enum class Kind { NotInvoked, Invoked, Failed };

  Kind kind = Kind::NotInvoked;
  // Do nodes invoked by this call, in invocation order.
  std::vector<NodeId> invoked;
  // Outputs of the last invoked node.
  Binding outputs;
  ErrorCode failure = ErrorCode::InvocationFailed;
  std::string reason;

  bool failed() const { return kind == Kind::Failed; }

  std::string describe() const {
    switch (kind) {
      case Kind::NotInvoked: return "NotInvoked";
      case Kind::Invoked: {
        std::string out = "Invoked";
        if (invoked.size() > 1) out += " x" + std::to_string(invoked.size());
        for (const auto& [k, v] : outputs) out += " " + k + "=" + format_value(v);
        return out;
      }
      case Kind::Failed: return "InvocationFailed: " + std::string(code_name(failure)) + ": " + reason;
    }
    return {};
  }
};

class ProgramGraph {
 public:
  ProgramGraph(SchemaPtr schema, WorldState initial)
      : schema_(std::move(schema)), initial_(initial), state_(std::move(initial)) {}

  const DomainSchema& schema() const { return *schema_; }
  const SchemaPtr& schema_ptr() const { return schema_; }
  const WorldState& initial_state() const { return initial_; }
  const WorldState& state() const { return state_; }
  const std::vector<Node>& nodes() const { return nodes_; }
  const Node& node(NodeId id) const { return nodes_.at(id); }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<NodeId>& path() const { return path_; }
  const std::vector<Invocation>& invocation_log() const { return log_; }
  bool contains(NodeId id) const { return id < nodes_.size(); }

  bool has_pending() const {
    for (NodeId id : path_)
      if (nodes_[id].status == NodeStatus::OnPathPending) return true;
    return false;
  }

  // Type carried by a value node; output references take the declared output type.
  TypeName value_type(NodeId id) const {
    const Node& n = nodes_.at(id);
    if (auto v = std::get_if<Value>(&n.value)) return type_of(*v);
    const auto& ref = std::get<OutputRef>(n.value);
    const auto* op = schema_->find_operation(nodes_.at(ref.do_node).op);
    return op->find_output(ref.param)->type;
  }

  // Concrete value of a value node, or nothing while its referent is uninvoked.
  std::optional<Value> resolve(NodeId id) const {
    const Node& n = nodes_.at(id);
    if (auto v = std::get_if<Value>(&n.value)) return *v;
    const auto& ref = std::get<OutputRef>(n.value);
    const Node& target = nodes_.at(ref.do_node);
    if (target.status != NodeStatus::Invoked) return std::nullopt;
    return resolve(target.outs.at(ref.param));
  }

  // ---- construction API ---------------------------------------------------

  NodeId new_value(Value v) {
    if (auto e = std::get_if<EntityId>(&v); e && !state_.knows(*e))
      throw Error(ErrorCode::UnknownEntity, format_entity(*e) + " has not been minted");
    Node n;
    n.kind = NodeKind::Value;
    n.value = std::move(v);
    return add_node(std::move(n));
  }

  // Value node standing for an output of a (possibly not yet invoked) Do node.
  NodeId new_output_ref(NodeId do_node, std::string param) {
    const Node& d = require(do_node);
    if (d.kind != NodeKind::Do) throw Error(ErrorCode::WrongNodeKind, name(do_node) + " is not a Do node");
    if (!op_of(d).find_output(param))
      throw Error(ErrorCode::UnknownRole, "'" + d.op + "' has no output '" + param + "'");
    Node n;
    n.kind = NodeKind::Value;
    n.value = OutputRef{do_node, std::move(param)};
    return add_node(std::move(n));
  }

  NodeId new_do(const std::string& op_name) {
    if (!schema_->find_operation(op_name)) throw Error(ErrorCode::UnknownOperation, "'" + op_name + "' is not in the domain");
    Node n;
    n.kind = NodeKind::Do;
    n.op = op_name;
    return add_node(std::move(n));
  }

  InvocationOutcome set_arg(NodeId do_node, const std::string& role, NodeId value) {
    const Node& d = require(do_node);
    const Node& v = require(value);
    if (d.kind != NodeKind::Do) throw Error(ErrorCode::WrongNodeKind, name(do_node) + " is not a Do node");
    if (d.status != NodeStatus::Detached && d.status != NodeStatus::OnPathPending && d.status != NodeStatus::InTree)
      throw Error(ErrorCode::NodeStatusViolation, name(do_node) + " is " + std::string(status_name(d.status)));
    const OperationSchema& op = op_of(d);
    const Param* p = op.find_input(role);
    if (!p) throw Error(ErrorCode::UnknownRole, "'" + op.name + "' has no input '" + role + "'");
    if (d.arg(role)) throw Error(ErrorCode::DuplicateRole, "'" + role + "' of " + name(do_node) + " is already bound");
    if (v.kind != NodeKind::Value) throw Error(ErrorCode::WrongNodeKind, name(value) + " is not a value node");
    if (auto t = value_type(value); !types_compatible(p->type, t))
      throw Error(ErrorCode::TypeMismatch, "'" + role + "' expects " + p->type + ", got " + t);

    InvocationOutcome outcome;
    if (d.status == NodeStatus::OnPathPending && d.args.size() + 1 == op.inputs.size()) {
      auto args = d.args;
      args.emplace_back(role, value);
      auto prepared = prepare(do_node, args);
      if (auto failure = std::get_if<InvocationOutcome>(&prepared)) return *failure;
      add_arg(do_node, role, value);
      commit(do_node, std::get<Prepared>(std::move(prepared)), outcome);
      return outcome;
    }
    add_arg(do_node, role, value);
    return outcome;
  }

  InvocationOutcome adjoin(NodeId id) {
    const Node& n = require(id);
    InvocationOutcome outcome;
    switch (n.kind) {
      case NodeKind::Value: throw Error(ErrorCode::WrongNodeKind, "value nodes cannot be adjoined");
      case NodeKind::Do: {
        expect_status(id, NodeStatus::Detached);
        if (n.args.size() == op_of(n).inputs.size()) {
          auto prepared = prepare(id, n.args);
          if (auto failure = std::get_if<InvocationOutcome>(&prepared)) return *failure;
          append_path(id);
          commit(id, std::get<Prepared>(std::move(prepared)), outcome);
        } else {
          append_path(id);
          set_status(id, NodeStatus::OnPathPending);
        }
        return outcome;
      }
      case NodeKind::Cond:
        expect_status(id, NodeStatus::Detached);
        run_cond(id, outcome);
        return outcome;
      case NodeKind::Tree:
        expect_status(id, NodeStatus::Unexecuted);
        if (n.owner_cond)
          throw Error(ErrorCode::NodeStatusViolation, name(id) + " is a branch of " + name(*n.owner_cond));
        set_status(id, NodeStatus::Spliced);
        splice_members(id, outcome);
        return outcome;
    }
    return outcome;
  }

  NodeId new_cond(Formula formula, const std::vector<std::pair<std::string, NodeId>>& args) {
    std::map<std::string, TypeName> roles;
    for (const auto& [role, v] : args) {
      if (require(v).kind != NodeKind::Value) throw Error(ErrorCode::WrongNodeKind, name(v) + " is not a value node");
      if (!roles.emplace(role, value_type(v)).second)
        throw Error(ErrorCode::DuplicateRole, "'" + role + "' bound twice");
    }
    auto term_type = [&](const Term& t) -> TypeName {
      if (auto val = std::get_if<Value>(&t)) return type_of(*val);
      const auto& r = std::get<ParamRef>(t).name;
      auto it = roles.find(r);
      if (it == roles.end()) throw Error(ErrorCode::UnboundVariable, "'" + r + "' is not bound by the conditional");
      return it->second;
    };
    for (const auto& c : formula.conjuncts) {
      if (c.is_atomic()) {
        const auto* pred = schema_->find_predicate(c.atom.predicate);
        if (!pred) throw Error(ErrorCode::UndeclaredPredicate, "'" + c.atom.predicate + "' is not declared");
        if (pred->param_types.size() != c.atom.args.size())
          throw Error(ErrorCode::ArityMismatch, format_atom(c.atom));
        for (std::size_t i = 0; i < c.atom.args.size(); ++i)
          if (auto t = term_type(c.atom.args[i]); !types_compatible(pred->param_types[i], t))
            throw Error(ErrorCode::TypeMismatch, format_atom(c.atom) + ": argument " + std::to_string(i) + " is " + t);
      } else {
        auto l = term_type(c.lhs), r = term_type(c.rhs);
        if (!types_compatible(l, r)) throw Error(ErrorCode::TypeMismatch, "cannot compare " + l + " with " + r);
      }
    }
    Node n;
    n.kind = NodeKind::Cond;
    n.formula = std::move(formula);
    NodeId id = add_node(std::move(n));
    for (const auto& [role, v] : args) add_arg(id, role, v);
    return id;
  }

  void attach_branch(NodeId cond, Branch which, NodeId tree) {
    const Node& c = require(cond);
    const Node& t = require(tree);
    if (c.kind != NodeKind::Cond) throw Error(ErrorCode::WrongNodeKind, name(cond) + " is not a conditional");
    if (t.kind != NodeKind::Tree) throw Error(ErrorCode::WrongNodeKind, name(tree) + " is not a tree");
    expect_status(cond, NodeStatus::Detached);
    auto slot = static_cast<std::size_t>(which);
    if (c.branches[slot])
      throw Error(ErrorCode::DuplicateBranch, name(cond) + " already has a " + std::string(branch_name(which)) + " branch");
    expect_status(tree, NodeStatus::Unexecuted);
    if (t.owner_cond) throw Error(ErrorCode::NodeStatusViolation, name(tree) + " is already a branch of " + name(*t.owner_cond));
    nodes_[cond].branches[slot] = tree;
    nodes_[tree].owner_cond = cond;
    edges_.push_back(BranchEdge{cond, which, tree});
  }

  NodeId new_tree(const std::vector<NodeId>& members) {
    std::set<NodeId> seen;
    for (NodeId m : members) {
      const Node& n = require(m);
      if (n.kind != NodeKind::Do && n.kind != NodeKind::Cond)
        throw Error(ErrorCode::WrongNodeKind, "trees hold only Do and conditional nodes");
      expect_status(m, NodeStatus::Detached);
      if (!seen.insert(m).second) throw Error(ErrorCode::DuplicateMember, name(m) + " listed twice");
    }
    Node root;
    root.kind = NodeKind::Tree;
    root.status = NodeStatus::Unexecuted;
    NodeId id = add_node(std::move(root));
    for (std::size_t i = 0; i < members.size(); ++i) {
      set_status(members[i], NodeStatus::InTree);
      nodes_[members[i]].tree = id;
      nodes_[id].members.push_back(members[i]);
      edges_.push_back(TreeMemberEdge{id, members[i], i});
    }
    return id;
  }

  void link(NodeId src, NodeId dst, const std::string& label) {
    require(src);
    require(dst);
    if (!extras_.emplace(src, dst, label).second)
      throw Error(ErrorCode::DuplicateExtraEdge, name(src) + " -" + label + "-> " + name(dst) + " exists");
    edges_.push_back(ExtraEdge{src, dst, label});
  }

  // Value node referring to `param` of the most recently invoked `op_name`.
  NodeId refer(const std::string& op_name, const std::string& param) {
    for (auto it = log_.rbegin(); it != log_.rend(); ++it) {
      const Node& d = nodes_[it->node];
      if (d.op == op_name && d.outs.count(param)) {
        Node n;
        n.kind = NodeKind::Value;
        n.value = OutputRef{it->node, param};
        return add_node(std::move(n));
      }
    }
    throw Error(ErrorCode::NoReferent, "no invoked '" + op_name + "' with output '" + param + "'");
  }

 private:
  struct Prepared {
    Binding inputs;
    WorldState next;
    Binding outputs;
  };

  static std::string name(NodeId id) { return "node " + std::to_string(id); }

  const Node& require(NodeId id) const {
    if (id >= nodes_.size()) throw Error(ErrorCode::DanglingNodeId, name(id) + " does not exist");
    return nodes_[id];
  }

  const OperationSchema& op_of(const Node& n) const { return *schema_->find_operation(n.op); }

  void expect_status(NodeId id, NodeStatus want) const {
    if (nodes_[id].status != want)
      throw Error(ErrorCode::NodeStatusViolation,
                  name(id) + " is " + std::string(status_name(nodes_[id].status)) + ", expected " +
                      std::string(status_name(want)));
  }

  void set_status(NodeId id, NodeStatus to) {
    Node& n = nodes_[id];
    if (!transition_allowed(n.kind, n.status, to))
      throw Error(ErrorCode::InternalError, name(id) + ": " + std::string(status_name(n.status)) + " -> " +
                                                std::string(status_name(to)));
    n.status = to;
  }

  NodeId add_node(Node n) {
    n.id = nodes_.size();
    nodes_.push_back(std::move(n));
    return nodes_.back().id;
  }

  void add_arg(NodeId node, const std::string& role, NodeId value) {
    nodes_[node].args.emplace_back(role, value);
    edges_.push_back(ArgEdge{node, role, value});
  }

  void append_path(NodeId id) {
    if (!path_.empty()) edges_.push_back(NextEdge{path_.back(), id});
    path_.push_back(id);
  }

  std::variant<Prepared, InvocationOutcome> prepare(NodeId do_node,
                                                    const std::vector<std::pair<std::string, NodeId>>& args) const {
    auto fail = [](ErrorCode code, std::string reason) {
      InvocationOutcome o;
      o.kind = InvocationOutcome::Kind::Failed;
      o.failure = code;
      o.reason = std::move(reason);
      return o;
    };
    Binding inputs;
    for (const auto& [role, v] : args) {
      auto value = resolve(v);
      if (!value) return fail(ErrorCode::UnresolvedReference, "'" + role + "' of " + name(do_node) + " refers to an uninvoked node");
      inputs.emplace(role, std::move(*value));
    }
    try {
      auto [next, outputs] = apply_operation(state_, op_of(nodes_[do_node]), inputs);
      return Prepared{std::move(inputs), std::move(next), std::move(outputs)};
    } catch (const Error& e) {
      return fail(e.code(), e.detail());
    }
  }

  void commit(NodeId do_node, Prepared p, InvocationOutcome& outcome) {
    state_ = std::move(p.next);
    const OperationSchema& op = op_of(nodes_[do_node]);
    for (const auto& param : op.outputs) {
      Node v;
      v.kind = NodeKind::Value;
      v.value = p.outputs.at(param.name);
      NodeId vid = add_node(std::move(v));
      nodes_[do_node].outs.emplace(param.name, vid);
      edges_.push_back(OutEdge{do_node, param.name, vid});
    }
    set_status(do_node, NodeStatus::Invoked);
    nodes_[do_node].log_index = log_.size();
    log_.push_back(Invocation{do_node, std::move(p.inputs), p.outputs});
    outcome.kind = InvocationOutcome::Kind::Invoked;
    outcome.invoked.push_back(do_node);
    outcome.outputs = std::move(p.outputs);
  }

  void run_cond(NodeId id, InvocationOutcome& outcome) {
    const Node& c = nodes_[id];
    if (!c.branches[0] || !c.branches[1])
      throw Error(ErrorCode::DanglingBranch, name(id) + " is missing its " + std::string(c.branches[0] ? "else" : "then") + " branch");
    Binding binding;
    for (const auto& [role, v] : c.args) {
      auto value = resolve(v);
      if (!value) throw Error(ErrorCode::UnresolvedReference, "'" + role + "' of " + name(id) + " refers to an uninvoked node");
      binding.emplace(role, std::move(*value));
    }
    bool holds = eval_formula(state_, c.formula, binding);
    Branch taken = holds ? Branch::Then : Branch::Else;
    NodeId active = *c.branches[static_cast<std::size_t>(taken)];
    NodeId inactive = *c.branches[1 - static_cast<std::size_t>(taken)];
    append_path(id);
    set_status(id, NodeStatus::Evaluated);
    nodes_[id].taken = taken;
    mark_unexecutable(inactive);
    set_status(active, NodeStatus::Spliced);
    splice_members(active, outcome);
  }

  void splice_members(NodeId root, InvocationOutcome& outcome) {
    for (NodeId m : std::vector<NodeId>(nodes_[root].members)) {
      const Node& n = nodes_[m];
      if (n.kind == NodeKind::Cond) {
        run_cond(m, outcome);
      } else {
        if (n.args.size() != op_of(n).inputs.size())
          throw Error(ErrorCode::NodeStatusViolation, "tree member " + name(m) + " has unbound inputs");
        auto prepared = prepare(m, n.args);
        if (auto failure = std::get_if<InvocationOutcome>(&prepared)) {
          failure->invoked = outcome.invoked;
          outcome = *failure;
        } else {
          append_path(m);
          commit(m, std::get<Prepared>(std::move(prepared)), outcome);
        }
      }
      if (outcome.failed()) return;
    }
  }

  void mark_unexecutable(NodeId root) {
    for (NodeId m : nodes_[root].members) {
      set_status(m, NodeStatus::Unexecutable);
      if (nodes_[m].kind == NodeKind::Cond)
        for (const auto& b : nodes_[m].branches)
          if (b) mark_unexecutable(*b);
    }
  }

  SchemaPtr schema_;
  WorldState initial_;
  WorldState state_;
  std::vector<Node> nodes_;
  std::vector<Edge> edges_;
  std::vector<NodeId> path_;
  std::vector<Invocation> log_;
  std::set<std::tuple<NodeId, NodeId, std::string>> extras_;
};

// Folds apply_operation over an invocation log, checking that every recorded
// output is reproduced.
inline WorldState replay_log(const DomainSchema& schema, const WorldState& initial, const std::vector<Invocation>& log,
                             const std::vector<Node>& nodes) {
  WorldState state = initial;
  for (const auto& entry : log) {
    const auto* op = schema.find_operation(nodes.at(entry.node).op);
    auto [next, outputs] = apply_operation(state, *op, entry.inputs);
    if (outputs != entry.outputs) throw Error(ErrorCode::InternalError, "replay minted different outputs");
    state = std::move(next);
  }
  return state;
}

inline WorldState replay_log(const ProgramGraph& g) {
  return replay_log(g.schema(), g.initial_state(), g.invocation_log(), g.nodes());
}

}  // namespace gpe
