from skelgnn.plotting.plotting import error_histogram_plot, hardest_poses_plot
