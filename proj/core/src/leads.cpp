#include "ecg12r/leads.hpp"

#include <algorithm>
#include <cctype>
#include <string>

namespace ecg12r {
namespace {

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

}  // namespace

std::string_view to_string(LeadName lead) noexcept {
  switch (lead) {
    case LeadName::I: return "I";
    case LeadName::II: return "II";
    case LeadName::III: return "III";
    case LeadName::aVR: return "aVR";
    case LeadName::aVL: return "aVL";
    case LeadName::aVF: return "aVF";
    case LeadName::V1: return "V1";
    case LeadName::V2: return "V2";
    case LeadName::V3: return "V3";
    case LeadName::V4: return "V4";
    case LeadName::V5: return "V5";
    case LeadName::V6: return "V6";
  }
  return "?";
}

std::optional<LeadName> parse_lead_name(std::string_view text) noexcept {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
  for (LeadName lead : kStandardLeads) {
    if (iequals(text, to_string(lead))) return lead;
  }
  return std::nullopt;
}

std::string_view to_string(DiagnosticGroup group) noexcept {
  switch (group) {
    case DiagnosticGroup::HC: return "HC";
    case DiagnosticGroup::BB: return "BB";
    case DiagnosticGroup::HY: return "HY";
    case DiagnosticGroup::MI: return "MI";
    case DiagnosticGroup::VA: return "VA";
    case DiagnosticGroup::ND: return "ND";
    case DiagnosticGroup::UNGROUPED: return "UNGROUPED";
  }
  return "?";
}

std::optional<DiagnosticGroup> parse_group(std::string_view text) noexcept {
  for (DiagnosticGroup g : kGroupOrder) {
    if (iequals(text, to_string(g))) return g;
  }
  return std::nullopt;
}

std::string_view to_string(Database db) noexcept {
  return db == Database::PTBDB ? "PTBDB" : "INCARTDB";
}

std::optional<Database> parse_database(std::string_view text) noexcept {
  if (iequals(text, "ptbdb")) return Database::PTBDB;
  if (iequals(text, "incartdb")) return Database::INCARTDB;
  return std::nullopt;
}

}  // namespace ecg12r
