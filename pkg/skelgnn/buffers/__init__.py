from skelgnn.buffers.buffer import Buffer, PoseBuffer
