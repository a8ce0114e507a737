#pragma once

#include <array>
#include <optional>
#include <string_view>

namespace ecg12r {

enum class LeadName { I, II, III, aVR, aVL, aVF, V1, V2, V3, V4, V5, V6 };

inline constexpr std::size_t kStandardLeadCount = 12;

inline constexpr std::array<LeadName, kStandardLeadCount> kStandardLeads = {
    LeadName::I,  LeadName::II, LeadName::III, LeadName::aVR, LeadName::aVL, LeadName::aVF,
    LeadName::V1, LeadName::V2, LeadName::V3,  LeadName::V4,  LeadName::V5,  LeadName::V6};

/// The reduced lead set every reconstruction starts from.
inline constexpr std::array<LeadName, 3> kInputLeads = {LeadName::I, LeadName::II, LeadName::V2};

/// Reconstruction targets, in the row order used by every report.
inline constexpr std::array<LeadName, 9> kOutputLeads = {
    LeadName::III, LeadName::aVR, LeadName::aVL, LeadName::aVF, LeadName::V1,
    LeadName::V3,  LeadName::V4,  LeadName::V5,  LeadName::V6};

inline constexpr std::array<LeadName, 4> kLimbTargets = {LeadName::III, LeadName::aVR,
                                                         LeadName::aVL, LeadName::aVF};

inline constexpr std::array<LeadName, 5> kPrecordialTargets = {
    LeadName::V1, LeadName::V3, LeadName::V4, LeadName::V5, LeadName::V6};

std::string_view to_string(LeadName lead) noexcept;

/// Case-insensitive match against the standard names ("i", "AVR", "v2", ...).
std::optional<LeadName> parse_lead_name(std::string_view text) noexcept;

enum class DiagnosticGroup { HC, BB, HY, MI, VA, ND, UNGROUPED };

inline constexpr std::array<DiagnosticGroup, 7> kGroupOrder = {
    DiagnosticGroup::HC, DiagnosticGroup::BB, DiagnosticGroup::HY,       DiagnosticGroup::MI,
    DiagnosticGroup::VA, DiagnosticGroup::ND, DiagnosticGroup::UNGROUPED};

std::string_view to_string(DiagnosticGroup group) noexcept;
std::optional<DiagnosticGroup> parse_group(std::string_view text) noexcept;

enum class Database { PTBDB, INCARTDB };

std::string_view to_string(Database db) noexcept;
std::optional<Database> parse_database(std::string_view text) noexcept;

}  // namespace ecg12r
