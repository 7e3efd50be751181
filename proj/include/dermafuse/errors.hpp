// Copyright 2026 The dermafuse Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace dermafuse {

/// Error vocabulary shared by every module. The CLI maps a thrown Error to
/// `error=<name>` on stderr and exit code 1, so names are load-bearing.
enum class ErrorCode {
    MalformedHeader,
    DuplicateId,
    BothFlagsSet,
    UnparseableCell,
    NegativeAge,
    AgeOutOfRange,
    UnknownSexToken,
    ScoreOutOfRange,
    IoFailure,
    MissingScores,
    ZeroChannel,
    EmptyAxis,
    MissingIdentity,
    IdSetMismatch,
    TaskMismatch,
    MissingTruthForOracle,
    DegenerateLabels,
    NoPositives,
    ZeroSkThreshold,
    BadK,
    MissingCalibration,
    BadConfig,
};

inline const char* error_name(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::MalformedHeader: return "MalformedHeader";
        case ErrorCode::DuplicateId: return "DuplicateId";
        case ErrorCode::BothFlagsSet: return "BothFlagsSet";
        case ErrorCode::UnparseableCell: return "UnparseableCell";
        case ErrorCode::NegativeAge: return "NegativeAge";
        case ErrorCode::AgeOutOfRange: return "AgeOutOfRange";
        case ErrorCode::UnknownSexToken: return "UnknownSexToken";
        case ErrorCode::ScoreOutOfRange: return "ScoreOutOfRange";
        case ErrorCode::IoFailure: return "IoFailure";
        case ErrorCode::MissingScores: return "MissingScores";
        case ErrorCode::ZeroChannel: return "ZeroChannel";
        case ErrorCode::EmptyAxis: return "EmptyAxis";
        case ErrorCode::MissingIdentity: return "MissingIdentity";
        case ErrorCode::IdSetMismatch: return "IdSetMismatch";
        case ErrorCode::TaskMismatch: return "TaskMismatch";
        case ErrorCode::MissingTruthForOracle: return "MissingTruthForOracle";
        case ErrorCode::DegenerateLabels: return "DegenerateLabels";
        case ErrorCode::NoPositives: return "NoPositives";
        case ErrorCode::ZeroSkThreshold: return "ZeroSkThreshold";
        case ErrorCode::BadK: return "BadK";
        case ErrorCode::MissingCalibration: return "MissingCalibration";
        case ErrorCode::BadConfig: return "BadConfig";
    }
    return "UnknownError";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(error_name(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }
    const char* name() const noexcept { return error_name(code_); }

private:
    ErrorCode code_;
};

}  // namespace dermafuse
