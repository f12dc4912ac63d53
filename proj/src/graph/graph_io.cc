/* Copyright 2026 The Pipelink Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "pipelink/graph/graph_io.h"

#include <map>

#include "absl/strings/str_cat.h"
#include "pipelink/common/status_macros.h"
#include "pipelink/common/text_format.h"

namespace pipelink {

std::string SerializeGraph(const ComputationGraph& graph) {
  std::string out = absl::StrCat("graph v1 ", graph.num_nodes(), " ",
                                 graph.num_edges(), "\n");
  for (const NodeProfile& p : graph.nodes()) {
    absl::StrAppend(&out, "node ", p.id, " ", p.kind, " ", p.flops, " ",
                    p.mem_bytes, " ", p.out_bytes, "\n");
  }
  for (const Edge& e : graph.edges()) {
    absl::StrAppend(&out, "edge ", e.src, " ", e.dst, "\n");
  }
  return out;
}

absl::StatusOr<ComputationGraph> ParseGraph(std::string_view text) {
  const std::vector<TextLine> lines = TokenizeLines(text);
  if (lines.empty() || lines[0].tokens[0] != "graph") {
    return absl::InvalidArgumentError(
        "line 1: expected header 'graph v1 <num_nodes> <num_edges>'");
  }
  const TextLine& header = lines[0];
  RETURN_IF_ERROR(ExpectTokens(header, 4, "graph"));
  if (header.tokens[1] != "v1") {
    return absl::InvalidArgumentError(absl::StrCat(
        "line ", header.number, ": unsupported graph version '",
        header.tokens[1], "'"));
  }
  ASSIGN_OR_RETURN(const int64_t num_nodes, ParseInt(header, 2, "num_nodes"));
  ASSIGN_OR_RETURN(const int64_t num_edges, ParseInt(header, 3, "num_edges"));

  std::vector<NodeProfile> nodes;
  std::vector<Edge> edges;
  std::map<int64_t, int> node_line;
  for (size_t i = 1; i < lines.size(); ++i) {
    const TextLine& line = lines[i];
    const std::string& tag = line.tokens[0];
    if (tag == "node") {
      RETURN_IF_ERROR(ExpectTokens(line, 6, "node"));
      NodeProfile p;
      ASSIGN_OR_RETURN(const int64_t id, ParseInt(line, 1, "id"));
      if (id < 0 || id >= num_nodes) {
        return absl::InvalidArgumentError(absl::StrCat(
            "line ", line.number, ": node id ", id, " outside 0..",
            num_nodes - 1));
      }
      if (auto [it, inserted] = node_line.emplace(id, line.number); !inserted) {
        return absl::InvalidArgumentError(
            absl::StrCat("line ", line.number, ": duplicate node id ", id,
                         " (first defined on line ", it->second, ")"));
      }
      p.id = static_cast<NodeId>(id);
      p.kind = line.tokens[2];
      ASSIGN_OR_RETURN(p.flops, ParseInt(line, 3, "flops"));
      ASSIGN_OR_RETURN(p.mem_bytes, ParseInt(line, 4, "mem_bytes"));
      ASSIGN_OR_RETURN(p.out_bytes, ParseInt(line, 5, "out_bytes"));
      if (p.flops < 0 || p.mem_bytes < 0 || p.out_bytes < 0) {
        return absl::InvalidArgumentError(absl::StrCat(
            "line ", line.number, ": node ", id, " has a negative profile"));
      }
      nodes.push_back(std::move(p));
    } else if (tag == "edge") {
      RETURN_IF_ERROR(ExpectTokens(line, 3, "edge"));
      ASSIGN_OR_RETURN(const int64_t src, ParseInt(line, 1, "src"));
      ASSIGN_OR_RETURN(const int64_t dst, ParseInt(line, 2, "dst"));
      if (src < 0 || src >= num_nodes || dst < 0 || dst >= num_nodes) {
        return absl::InvalidArgumentError(absl::StrCat(
            "line ", line.number, ": edge ", src, "->", dst,
            " references an unknown node"));
      }
      edges.push_back({static_cast<NodeId>(src), static_cast<NodeId>(dst)});
    } else {
      return absl::InvalidArgumentError(absl::StrCat(
          "line ", line.number, ": unknown record '", tag, "'"));
    }
  }
  if (static_cast<int64_t>(nodes.size()) != num_nodes) {
    return absl::InvalidArgumentError(absl::StrCat(
        "header declares ", num_nodes, " nodes, file has ", nodes.size()));
  }
  if (static_cast<int64_t>(edges.size()) != num_edges) {
    return absl::InvalidArgumentError(absl::StrCat(
        "header declares ", num_edges, " edges, file has ", edges.size()));
  }

  ASSIGN_OR_RETURN(ComputationGraph graph,
                   ComputationGraph::Create(std::move(nodes), std::move(edges)));
  for (const Edge& e : graph.edges()) {
    if (e.src >= e.dst) {
      return absl::InvalidArgumentError(absl::StrCat(
          "edge ", e.src, "->", e.dst, " violates topological id order"));
    }
  }
  return graph;
}

absl::Status SaveGraph(const ComputationGraph& graph, const std::string& path) {
  return WriteStringToFile(path, SerializeGraph(graph));
}

absl::StatusOr<ComputationGraph> LoadGraph(const std::string& path) {
  ASSIGN_OR_RETURN(const std::string text, ReadFileToString(path));
  auto graph = ParseGraph(text);
  if (!graph.ok()) {
    return absl::Status(graph.status().code(),
                        absl::StrCat(path, ": ", graph.status().message()));
  }
  return graph;
}

}  // namespace pipelink
