#pragma once

#include "semfuse/components.hpp"
#include "semfuse/config.hpp"
#include "semfuse/error.hpp"
#include "semfuse/fusion.hpp"
#include "semfuse/geometry.hpp"
#include "semfuse/interaction.hpp"
#include "semfuse/io.hpp"
#include "semfuse/log.hpp"
#include "semfuse/metrics.hpp"
#include "semfuse/ply.hpp"
#include "semfuse/protocol.hpp"
#include "semfuse/rasterizer.hpp"
#include "semfuse/scenegen.hpp"
#include "semfuse/segmentation.hpp"
#include "semfuse/session.hpp"
#include "semfuse/simulate.hpp"
#include "semfuse/transport.hpp"
