"""Figure generation over the sampler CLI's CSV outputs.

These scripts only read the CSV files and draw; every statistic is computed
upstream.  Figures are rendered with a fixed size, DPI and backend and carry
no timestamps, so identical inputs yield byte-identical images.
"""

from .figures import FigureSpec, load_spec, plot_acf, plot_update_rates

__version__ = "0.1.0"
