"""Built-in architecture skeletons.

Only the layer geometry matters here: batch norm, classifier heads and
projection shortcuts are left out.  Downsampling residual blocks therefore
carry no skip connection, which keeps the number of stride-2 layers at five
for every preset.
"""

from __future__ import annotations

from .netspec import NetworkSpec, NetworkSpecError, add, conv, depthwise, maxpool, relu

VGG_CONFIGS = {
    16: [64, 64, "M", 128, 128, "M", 256, 256, 256, "M", 512, 512, 512, "M",
         512, 512, 512, "M"],
    19: [64, 64, "M", 128, 128, "M", 256, 256, 256, 256, "M", 512, 512, 512, 512, "M",
         512, 512, 512, 512, "M"],
}


def vgg(depth=19, pool_kernel=2, dilation=1, input_channels=3) -> NetworkSpec:
    """VGG feature extractor: SAME zero-padded 3x3 convs and stride-2 pooling.

    Pool windows wider than the stride get SAME zero padding.
    """
    layers = []
    ch = input_channels
    for item in VGG_CONFIGS[depth]:
        if item == "M":
            if pool_kernel == 2:
                layers.append(maxpool(2, ch, s=2))
            else:
                layers.append(maxpool(pool_kernel, ch, s=2, pad="zero"))
        else:
            layers.append(conv(3, ch, item, d=dilation))
            layers.append(relu(item))
            ch = item
    name = f"vgg{depth}" if pool_kernel == 2 and dilation == 1 else \
        f"vgg{depth}_pool{pool_kernel}_dil{dilation}"
    return NetworkSpec(input_channels, tuple(layers), name)


def _resnet_stem(layers, input_channels):
    layers.append(conv(7, input_channels, 64, s=2, amounts=3))
    layers.append(relu(64))
    layers.append(maxpool(3, 64, s=2, pad="zero", amounts=1))
    return 64


def resnet18_skeleton(input_channels=3) -> NetworkSpec:
    layers = []
    ch = _resnet_stem(layers, input_channels)
    for stage, width in enumerate((64, 128, 256, 512)):
        for block in range(2):
            stride = 2 if stage > 0 and block == 0 else 1
            block_input = len(layers) - 1
            identity = stride == 1 and ch == width
            layers += [conv(3, ch, width, s=stride, amounts=1), relu(width),
                       conv(3, width, width, amounts=1)]
            if identity:
                layers.append(add(block_input, width))
            layers.append(relu(width))
            ch = width
    return NetworkSpec(input_channels, tuple(layers), "resnet18_skeleton")


def resnet50_skeleton(input_channels=3) -> NetworkSpec:
    layers = []
    ch = _resnet_stem(layers, input_channels)
    for stage, (width, blocks) in enumerate(zip((64, 128, 256, 512), (3, 4, 6, 3))):
        out = 4 * width
        for block in range(blocks):
            stride = 2 if stage > 0 and block == 0 else 1
            block_input = len(layers) - 1
            identity = stride == 1 and ch == out
            layers += [conv(1, ch, width, pad="valid"), relu(width),
                       conv(3, width, width, s=stride, amounts=1), relu(width),
                       conv(1, width, out, pad="valid")]
            if identity:
                layers.append(add(block_input, out))
            layers.append(relu(out))
            ch = out
    return NetworkSpec(input_channels, tuple(layers), "resnet50_skeleton")


MOBILENET_BLOCKS = [(1, 64), (2, 128), (1, 128), (2, 256), (1, 256), (2, 512),
                    (1, 512), (1, 512), (1, 512), (1, 512), (1, 512),
                    (2, 1024), (1, 1024)]


def mobilenetv1_skeleton(input_channels=3) -> NetworkSpec:
    """Standard MobileNet-v1 body with explicit 1-pixel padding on every 3x3."""
    layers = [conv(3, input_channels, 32, s=2, amounts=1), relu(32)]
    ch = 32
    for stride, out in MOBILENET_BLOCKS:
        layers += [depthwise(3, ch, s=stride, amounts=1), relu(ch),
                   conv(1, ch, out, pad="valid"), relu(out)]
        ch = out
    return NetworkSpec(input_channels, tuple(layers), "mobilenetv1_skeleton")


PRESETS = {
    "vgg16": lambda: vgg(16),
    "vgg19": lambda: vgg(19),
    "resnet18_skeleton": resnet18_skeleton,
    "resnet50_skeleton": resnet50_skeleton,
    "mobilenetv1_skeleton": mobilenetv1_skeleton,
}


def preset(name: str) -> NetworkSpec:
    try:
        return PRESETS[name]()
    except KeyError:
        raise NetworkSpecError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
