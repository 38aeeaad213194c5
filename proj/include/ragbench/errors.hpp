#pragma once

#include <stdexcept>
#include <string>

namespace ragbench {

// Base class for all harness errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define RAGBENCH_ERROR(Name)           \
  class Name : public Error {          \
   public:                             \
    using Error::Error;                \
  };

// dataset
RAGBENCH_ERROR(FileNotFound)
RAGBENCH_ERROR(ParseError)
RAGBENCH_ERROR(SchemaError)
RAGBENCH_ERROR(InsufficientCell)

// perturb
RAGBENCH_ERROR(InvalidFactCount)
RAGBENCH_ERROR(NoIrrelevantSentence)
RAGBENCH_ERROR(MissingLexicon)
RAGBENCH_ERROR(MissingPrefix)
RAGBENCH_ERROR(ReplayMismatch)

// llm
RAGBENCH_ERROR(EmptyLogits)
RAGBENCH_ERROR(NonFiniteLogit)
RAGBENCH_ERROR(BackendError)
RAGBENCH_ERROR(ConfigError)
RAGBENCH_ERROR(CacheCorruption)

// refproc
RAGBENCH_ERROR(EmptyField)
RAGBENCH_ERROR(EmptyGeneration)

// metrics
RAGBENCH_ERROR(EmptyEmbeddings)
RAGBENCH_ERROR(DimensionMismatch)
RAGBENCH_ERROR(EmptyText)

// stats
RAGBENCH_ERROR(TooFewRuns)
RAGBENCH_ERROR(ZeroMean)
RAGBENCH_ERROR(EmptyGroup)
RAGBENCH_ERROR(MixedKeys)
RAGBENCH_ERROR(NonBaselineEntry)
RAGBENCH_ERROR(NoComparablePairs)

// report
RAGBENCH_ERROR(MissingSeries)
RAGBENCH_ERROR(IoError)

// orchestration
RAGBENCH_ERROR(InvalidConfig)
RAGBENCH_ERROR(FatalConfig)
RAGBENCH_ERROR(DatasetError)
RAGBENCH_ERROR(ManifestMismatch)

#undef RAGBENCH_ERROR

}  // namespace ragbench
