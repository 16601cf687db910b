_KEY_STYLE = "sea_green3"
_VAL_STYLE = "bold sky_blue3"
_ALT_ROW_STYLE_0 = "default"
_ALT_ROW_STYLE_1 = "on #101010"

_VERDICT_STYLES = {
    "joint": "bold green3",
    "individual_correlated": "dark_orange",
    "noise": "grey50",
}
_FLAG_STYLE = "bold red"
