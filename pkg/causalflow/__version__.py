#                              _  __ _
#   ___ __ _ _   _ ___  __ _| |/ _| | _____      __
#  / __/ _` | | | / __|/ _` | | |_| |/ _ \ \ /\ / /
# | (_| (_| | |_| \__ \ (_| | |  _| | (_) \ V  V /
#  \___\__,_|\__,_|___/\__,_|_|_| |_|\___/ \_/\_/
#

__title__ = "causalflow"
__description__ = "desk-scale causal-flow visual encoder with dual-stream attention"
__author__ = "causalflow developers"
__author_email__ = "dev@causalflow.invalid"
__version__ = "0.3.0"
__status__ = "alpha"
__license__ = "BSD-3-Clause"
__license_url__ = "https://opensource.org/licenses/BSD-3-Clause"
