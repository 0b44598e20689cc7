#pragma once

#include "jeval/augment.hpp"
#include "jeval/bias.hpp"
#include "jeval/corpus.hpp"
#include "jeval/judge_client.hpp"
#include "jeval/metrics.hpp"
#include "jeval/stats.hpp"
#include "jeval/version.hpp"
