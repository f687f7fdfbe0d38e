# Licensed under the BSD 3-Clause License.

from typing import List, Optional

from skelgnn.autodiff import Parameter, Tensor, conv1d_temporal, reshape, transpose
from skelgnn.errors import ShapeMismatch
from skelgnn.layers.layer import Layer, uniform_param


class TemporalConvLayer(Layer):
    """1 x F convolution along the frame axis, shared by all nodes.

    Features travel through the model as [B*T x N x C] with the T frames of a
    window stored consecutively; the layer regroups them into sequences,
    convolves and flattens them back.
    """

    def __init__(
        self,
        name: str,
        c_in: int,
        c_out: int,
        kernel: int = 3,
        stride: int = 1,
        dilation: int = 1,
        seed: int = 0,
    ):
        super().__init__(name, c_in, c_out)
        self.stride = stride
        self.dilation = dilation
        self.kernel = uniform_param(
            seed, f"{name}.kernel", (c_out, c_in, kernel), c_in * kernel
        )
        self._config_string = str(
            dict(
                kind="tcn",
                c_in=c_in,
                c_out=c_out,
                kernel=kernel,
                stride=stride,
                dilation=dilation,
            )
        )

    def output_frames(self, frames: int) -> int:
        return -(-frames // self.stride)

    def __call__(
        self, x: Tensor, training: bool = False, frames: Optional[int] = None, **kwargs
    ) -> Tensor:
        frames = frames or 1
        bt, n, c = x.shape
        if bt % frames != 0:
            raise ShapeMismatch(f"batch {bt} is not a multiple of {frames} frames")
        seq = transpose(reshape(x, (bt // frames, frames, n, c)), (0, 3, 1, 2))
        y = conv1d_temporal(seq, self.kernel, self.stride, self.dilation)
        t_out = y.shape[2]
        y = transpose(y, (0, 2, 3, 1))
        return reshape(y, ((bt // frames) * t_out, n, self.c_out))

    def parameters(self) -> List[Parameter]:
        return [self.kernel]
