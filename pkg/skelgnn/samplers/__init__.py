from skelgnn.samplers.sampler import Sampler, EpochSampler
