#pragma once

#include <map>
#include <vector>

#include "shortvid/domain.hpp"
#include "shortvid/rebuffer_forecast.hpp"

namespace shortvid {

/// Forecast for one not-yet-buffered chunk, in absolute session time.
struct ChunkForecast {
  ChunkId chunk;
  RebufferCurve curve;
  double reach = 0.0;    // probability the chunk is ever played
  double seconds = 0.0;  // playable seconds when played
};

using ForecastMap = std::map<ChunkId, ChunkForecast>;

struct SequenceSlot {
  ChunkId chunk;
  int level = 0;
  double start_s = 0.0;   // projected download start
  double finish_s = 0.0;  // projected download finish
};

/// Priority-ordered downloads for one horizon; slots.front() is the action
/// to take now.
struct BufferSequence {
  std::vector<SequenceSlot> slots;

  bool empty() const { return slots.empty(); }
  std::size_t size() const { return slots.size(); }
  const SequenceSlot& front() const { return slots.front(); }
};

}  // namespace shortvid
