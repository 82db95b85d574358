#!/usr/bin/env python3
"""Regenerate the packaged fixtures under src/aislebot/data.

Everything here is deterministic: run it twice and the files are identical.
The catalog and corpus are synthetic but engineered to exercise the full
pipeline (diet/allergen tags, multi-brand products, ambiguous queries).
"""

from __future__ import annotations

import csv
import io
import json
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

from aislebot.classifier import read_corpus, split_corpus, train  # noqa: E402

DATA = ROOT / "src" / "aislebot" / "data"

# ---------------------------------------------------------------------------
# Catalog: (name, category, shelf, price_cents, tags, description, brands)
# ---------------------------------------------------------------------------

VEG = "vegetarian"

ITEMS = [
    # produce (S01-S02)
    ("Organic Spinach", "produce", "S01", 349, [VEG, "organic"], "Fresh organic baby spinach leaves", ["Green Valley", "Countryside"]),
    ("Spinach", "produce", "S01", 199, [VEG], "Fresh spinach bunch", ["Aisle Basics"]),
    ("Carrots", "produce", "S01", 129, [VEG], "Loose carrots per kilo", ["Aisle Basics", "Green Valley"]),
    ("Yellow Onions", "produce", "S01", 109, [VEG], "Yellow cooking onions net", ["Aisle Basics"]),
    ("Roma Tomatoes", "produce", "S01", 249, [VEG], "Ripe roma tomatoes", ["Green Valley", "Sunrise"]),
    ("Bananas", "produce", "S02", 119, [VEG], "Bananas per kilo", ["Sunrise"]),
    ("Gala Apples", "produce", "S02", 279, [VEG, "local"], "Crisp gala apples bag", ["Countryside", "Sunrise"]),
    ("Broccoli", "produce", "S02", 219, [VEG], "Broccoli crown", ["Green Valley"]),
    ("Garlic", "produce", "S02", 89, [VEG], "Garlic bulbs", ["Aisle Basics"]),
    ("Lemons", "produce", "S02", 149, [VEG], "Juicy lemons net", ["Sunrise"]),
    ("Avocados", "produce", "S02", 329, [VEG], "Ready to eat avocados", ["Green Valley"]),
    # bakery (S03)
    ("White Bread", "bakery", "S03", 189, [VEG, "gluten"], "Sliced white sandwich bread", ["Baker's Own", "Aisle Basics"]),
    ("Whole Wheat Bread", "bakery", "S03", 229, [VEG, "gluten", "whole_grain", "high_fiber"], "Stoneground whole wheat loaf", ["Baker's Own", "Countryside"]),
    ("Croissants", "bakery", "S03", 319, [VEG, "gluten", "dairy"], "Butter croissants 4 pack", ["Baker's Own"]),
    ("Bagels", "bakery", "S03", 269, [VEG, "gluten"], "Plain bagels 5 pack", ["Baker's Own"]),
    ("Premade Chocolate Cake", "bakery", "S03", 1099, [VEG, "gluten", "dairy", "egg"], "Ready to serve chocolate layer cake", ["Baker's Own"]),
    # baking (S04-S05)
    ("All-Purpose Flour", "baking", "S04", 219, [VEG, "gluten"], "Plain white wheat flour 1kg", ["Baker's Own", "Aisle Basics", "Golden Crown"]),
    ("Whole Wheat Flour", "baking", "S04", 259, [VEG, "gluten", "whole_grain", "high_fiber"], "Stoneground whole wheat flour 1kg", ["Baker's Own", "Countryside"]),
    ("Almond Flour", "baking", "S04", 649, [VEG], "Finely ground blanched almond flour", ["Golden Crown"]),
    ("Rye Flour", "baking", "S04", 289, [VEG, "gluten", "whole_grain"], "Dark rye flour 1kg", ["Countryside"]),
    ("Vanilla Cake Mix", "baking", "S04", 339, [VEG, "gluten"], "Just add eggs and milk cake mix", ["Golden Crown", "Aisle Basics"]),
    ("Baking Powder", "baking", "S04", 149, [VEG], "Double acting baking powder tin", ["Baker's Own", "Aisle Basics"]),
    ("Baking Soda", "baking", "S04", 99, [VEG], "Pure sodium bicarbonate", ["Aisle Basics"]),
    ("Vanilla Extract", "baking", "S05", 499, [VEG], "Natural vanilla extract 50ml", ["Golden Crown", "Baker's Own"]),
    ("White Sugar", "baking", "S05", 179, [VEG], "Fine granulated white sugar 1kg", ["Aisle Basics", "Golden Crown"]),
    ("Brown Sugar", "baking", "S05", 209, [VEG], "Soft brown cane sugar", ["Golden Crown"]),
    ("Powdered Sugar", "baking", "S05", 189, [VEG], "Icing sugar for frosting", ["Baker's Own"]),
    ("Chocolate Chips", "baking", "S05", 329, [VEG, "dairy"], "Dark chocolate baking chips", ["Golden Crown", "Baker's Own"]),
    ("Cocoa Powder", "baking", "S05", 379, [VEG], "Unsweetened dutch cocoa powder", ["Golden Crown"]),
    ("Dry Yeast", "baking", "S05", 139, [VEG], "Instant dry yeast sachets", ["Baker's Own"]),
    ("Cornstarch", "baking", "S05", 129, [VEG], "Pure corn starch thickener", ["Aisle Basics"]),
    # dairy & eggs (S06-S07)
    ("Whole Milk", "dairy", "S06", 159, [VEG, "dairy"], "Fresh whole milk 1l", ["Morning Star", "Countryside"]),
    ("Skim Milk", "dairy", "S06", 149, [VEG, "dairy", "low_sugar"], "Fresh skimmed milk 1l", ["Morning Star"]),
    ("Oat Milk", "dairy", "S06", 249, [VEG, "whole_grain"], "Oat drink unsweetened 1l", ["Green Valley", "Morning Star"]),
    ("Almond Milk", "dairy", "S06", 269, [VEG, "low_sugar"], "Unsweetened almond drink", ["Green Valley"]),
    ("Eggs", "dairy", "S06", 329, [VEG, "egg"], "Free range eggs dozen", ["Morning Star", "Countryside"]),
    ("Butter", "dairy", "S07", 399, [VEG, "dairy"], "Salted dairy butter 250g", ["Morning Star", "Countryside"]),
    ("Margarine", "dairy", "S07", 229, [VEG], "Plant based spread tub", ["Aisle Basics"]),
    ("Cheddar Cheese", "dairy", "S07", 549, [VEG, "dairy"], "Mature cheddar block", ["Countryside", "Morning Star"]),
    ("Mozzarella", "dairy", "S07", 379, [VEG, "dairy"], "Fresh mozzarella ball", ["Morning Star"]),
    ("Greek Yogurt", "dairy", "S07", 319, [VEG, "dairy", "low_sugar"], "Strained greek yogurt 500g", ["Morning Star", "Green Valley"]),
    ("Cream Cheese", "dairy", "S07", 289, [VEG, "dairy"], "Soft cream cheese tub", ["Morning Star"]),
    ("Heavy Cream", "dairy", "S07", 259, [VEG, "dairy"], "Whipping cream 250ml", ["Morning Star"]),
    # meat (S08)
    ("Chicken Breast", "meat", "S08", 799, ["meat"], "Skinless chicken breast fillets", ["Blue Harbor", "Countryside"]),
    ("Ground Beef", "meat", "S08", 699, ["meat"], "Lean ground beef 500g", ["Countryside"]),
    ("Bacon", "meat", "S08", 499, ["meat"], "Smoked streaky bacon rashers", ["Countryside", "Blue Harbor"]),
    ("Pork Chops", "meat", "S08", 749, ["meat"], "Bone in pork loin chops", ["Countryside"]),
    ("Turkey Slices", "meat", "S08", 429, ["meat"], "Oven roasted turkey deli slices", ["Blue Harbor"]),
    ("Pork Sausages", "meat", "S08", 459, ["meat", "gluten"], "Seasoned pork sausages", ["Countryside"]),
    # fish (S09)
    ("Salmon Fillet", "fish", "S09", 1099, ["fish"], "Fresh atlantic salmon fillet", ["Blue Harbor"]),
    ("Canned Tuna", "fish", "S09", 219, ["fish"], "Tuna chunks in brine", ["Blue Harbor", "Aisle Basics"]),
    ("Shrimp", "fish", "S09", 999, ["fish"], "Peeled raw shrimp frozen", ["Blue Harbor"]),
    ("Cod Fillet", "fish", "S09", 899, ["fish"], "Wild caught cod fillet", ["Blue Harbor"]),
    # breakfast (S10-S11)
    ("Corn Flakes", "breakfast", "S10", 289, [VEG], "Classic toasted corn flakes", ["Sunrise", "Aisle Basics"]),
    ("Bran Flakes", "breakfast", "S10", 309, [VEG, "gluten", "whole_grain", "high_fiber"], "High fiber wheat bran flakes cereal", ["Sunrise", "Green Valley"]),
    ("Oat Cereal Rings", "breakfast", "S10", 329, [VEG, "whole_grain", "high_fiber"], "Toasted whole grain oat cereal", ["Sunrise"]),
    ("Muesli", "breakfast", "S10", 399, [VEG, "gluten", "whole_grain", "high_fiber"], "Fruit and nut muesli high fibre", ["Green Valley", "Countryside"]),
    ("Granola", "breakfast", "S10", 449, [VEG, "gluten", "honey"], "Honey oat granola clusters", ["Sunrise"]),
    ("Rolled Oats", "breakfast", "S10", 239, [VEG, "whole_grain", "high_fiber"], "Old fashioned rolled oats 1kg", ["Countryside", "Aisle Basics"]),
    ("Peanut Butter", "breakfast", "S11", 349, [VEG, "peanut"], "Smooth roasted peanut butter", ["Sunrise", "Golden Crown"]),
    ("Clover Honey", "breakfast", "S11", 519, [VEG, "honey"], "Pure clover honey squeeze bottle", ["Countryside"]),
    ("Strawberry Jam", "breakfast", "S11", 279, [VEG], "Strawberry preserve jar", ["Golden Crown", "Aisle Basics"]),
    ("Maple Syrup", "breakfast", "S11", 689, [VEG], "Pure maple syrup 250ml", ["Countryside"]),
    # beverages (S12-S13)
    ("Orange Juice", "beverages", "S12", 299, [VEG], "Freshly squeezed orange juice 1l", ["Sunrise", "Morning Star"]),
    ("Apple Juice", "beverages", "S12", 259, [VEG], "Pressed apple juice 1l", ["Sunrise"]),
    ("Cola", "beverages", "S12", 189, [VEG], "Classic cola bottle 1.5l", ["Prima"]),
    ("Sparkling Water", "beverages", "S12", 99, [VEG, "low_sugar"], "Carbonated natural mineral water", ["Prima", "Aisle Basics"]),
    ("Ground Coffee", "beverages", "S13", 599, [VEG], "Medium roast ground coffee 250g", ["Golden Crown", "Prima"]),
    ("Green Tea", "beverages", "S13", 289, [VEG, "low_sugar"], "Green tea bags 40 count", ["Prima"]),
    ("Black Tea", "beverages", "S13", 249, [VEG], "Breakfast blend tea bags", ["Prima", "Aisle Basics"]),
    # snacks (S14-S15)
    ("Potato Chips", "snacks", "S14", 229, [VEG], "Salted potato chips sharing bag", ["Prima", "Aisle Basics"]),
    ("Tortilla Chips", "snacks", "S14", 249, [VEG], "Corn tortilla chips", ["Prima"]),
    ("Salted Peanuts", "snacks", "S14", 199, [VEG, "peanut"], "Roasted salted peanuts tin", ["Sunrise"]),
    ("Almonds", "snacks", "S14", 479, [VEG], "Natural whole almonds bag", ["Golden Crown"]),
    ("Dark Chocolate Bar", "snacks", "S15", 259, [VEG, "dairy"], "70 percent dark chocolate bar", ["Golden Crown", "Prima"]),
    ("Gummy Bears", "snacks", "S15", 179, ["gelatin"], "Fruit gummy bears with gelatin", ["Prima"]),
    ("Marshmallows", "snacks", "S15", 199, ["gelatin"], "Soft vanilla marshmallows", ["Prima"]),
    ("Wheat Crackers", "snacks", "S15", 219, [VEG, "gluten"], "Crisp wheat crackers box", ["Aisle Basics", "Baker's Own"]),
    ("Rice Cakes", "snacks", "S15", 169, [VEG, "low_sugar"], "Lightly salted rice cakes", ["Green Valley"]),
    # pantry (S16-S19)
    ("Spaghetti", "pantry", "S16", 179, [VEG, "gluten"], "Durum wheat spaghetti 500g", ["Prima", "Aisle Basics", "Golden Crown"]),
    ("Penne Pasta", "pantry", "S16", 179, [VEG, "gluten"], "Durum wheat penne 500g", ["Prima", "Aisle Basics"]),
    ("Basmati Rice", "pantry", "S16", 329, [VEG], "Aged basmati rice 1kg", ["Golden Crown", "Aisle Basics"]),
    ("Quinoa", "pantry", "S16", 549, [VEG, "whole_grain", "high_fiber"], "White quinoa 500g", ["Green Valley"]),
    ("Red Lentils", "pantry", "S16", 269, [VEG, "high_fiber"], "Split red lentils 500g", ["Aisle Basics", "Green Valley"]),
    ("Chickpeas", "pantry", "S17", 149, [VEG, "high_fiber"], "Cooked chickpeas can", ["Aisle Basics"]),
    ("Canned Tomatoes", "pantry", "S17", 129, [VEG], "Chopped tomatoes can", ["Aisle Basics", "Prima"]),
    ("Tomato Paste", "pantry", "S17", 109, [VEG], "Double concentrate tomato paste", ["Prima"]),
    ("Coconut Milk", "pantry", "S17", 219, [VEG], "Coconut milk can for curry", ["Golden Crown"]),
    ("Olive Oil", "pantry", "S18", 749, [VEG, "organic"], "Extra virgin olive oil 500ml", ["Golden Crown", "Green Valley"]),
    ("Sunflower Oil", "pantry", "S18", 329, [VEG], "Refined sunflower oil 1l", ["Aisle Basics"]),
    ("Soy Sauce", "pantry", "S18", 269, [VEG, "gluten"], "Naturally brewed soy sauce", ["Prima"]),
    ("White Vinegar", "pantry", "S18", 119, [VEG], "Distilled white vinegar", ["Aisle Basics"]),
    ("Sea Salt", "pantry", "S19", 139, [VEG], "Fine sea salt shaker", ["Aisle Basics", "Golden Crown"]),
    ("Black Pepper", "pantry", "S19", 219, [VEG], "Ground black pepper jar", ["Golden Crown"]),
    ("Dried Basil", "pantry", "S19", 169, [VEG], "Dried basil leaves jar", ["Golden Crown"]),
    ("Ground Cinnamon", "pantry", "S19", 189, [VEG], "Ground cinnamon jar", ["Golden Crown", "Aisle Basics"]),
    ("Firm Tofu", "pantry", "S19", 289, [VEG, "organic"], "Organic firm tofu block", ["Green Valley"]),
    ("Tempeh", "pantry", "S19", 349, [VEG, "organic"], "Fermented soy tempeh", ["Green Valley"]),
    # household (S20-S22)
    ("Dish Soap", "household", "S20", 229, [], "Lemon dish washing liquid", ["Prima", "Thrifty"]),
    ("Laundry Detergent", "household", "S20", 899, [], "Concentrated laundry detergent", ["Prima", "Thrifty"]),
    ("Paper Towels", "household", "S20", 349, ["value"], "Absorbent paper towels 4 rolls", ["Thrifty"]),
    ("Toilet Paper", "household", "S21", 529, ["value"], "Soft toilet paper 9 rolls", ["Thrifty", "Prima"]),
    ("Trash Bags", "household", "S21", 299, [], "Heavy duty trash bags 30 count", ["Thrifty"]),
    ("Kitchen Sponges", "household", "S21", 149, [], "Scrub sponges 6 pack", ["Thrifty"]),
    ("Aluminium Foil", "household", "S22", 259, [], "Aluminium foil roll 30m", ["Thrifty", "Aisle Basics"]),
    ("Baking Paper", "household", "S22", 219, [], "Non stick baking parchment roll", ["Baker's Own"]),
    ("AA Batteries", "household", "S22", 449, [], "Alkaline AA batteries 8 pack", ["Prima"]),
    # frozen (S13 shares the cold aisle)
    ("Frozen Peas", "frozen", "S13", 189, [VEG], "Garden peas frozen 750g", ["Aisle Basics", "Green Valley"]),
    ("Frozen Berries", "frozen", "S13", 429, [VEG], "Mixed berries frozen bag", ["Green Valley"]),
    ("Vanilla Ice Cream", "frozen", "S13", 449, [VEG, "dairy", "egg"], "Classic vanilla dairy ice cream tub", ["Morning Star", "Prima"]),
    ("Frozen Pizza Margherita", "frozen", "S13", 499, [VEG, "gluten", "dairy"], "Stone baked margherita pizza", ["Prima"]),
    ("Fish Fingers", "frozen", "S13", 379, ["fish", "gluten"], "Breaded cod fish fingers", ["Blue Harbor"]),
    # condiments & deli (S17 extension)
    ("Mayonnaise", "condiments", "S17", 249, [VEG, "egg"], "Classic egg mayonnaise jar", ["Prima", "Aisle Basics"]),
    ("Ketchup", "condiments", "S17", 199, [VEG], "Tomato ketchup squeeze bottle", ["Prima"]),
    ("Dijon Mustard", "condiments", "S17", 229, [VEG], "Smooth dijon mustard jar", ["Golden Crown"]),
    ("Hummus", "condiments", "S17", 269, [VEG], "Chickpea hummus tub", ["Green Valley", "Aisle Basics"]),
    ("Green Olives", "condiments", "S17", 289, [VEG], "Pitted green olives jar", ["Golden Crown"]),
    ("Salsa", "condiments", "S17", 259, [VEG], "Chunky tomato salsa medium", ["Prima"]),
    # more produce range
    ("Cucumber", "produce", "S01", 99, [VEG], "Whole cucumber", ["Green Valley"]),
    ("Bell Peppers", "produce", "S01", 269, [VEG], "Mixed bell peppers 3 pack", ["Green Valley", "Sunrise"]),
    ("Mushrooms", "produce", "S02", 239, [VEG], "White button mushrooms punnet", ["Countryside"]),
    ("Strawberries", "produce", "S02", 399, [VEG, "local"], "Fresh strawberries punnet", ["Countryside", "Sunrise"]),
    ("Blueberries", "produce", "S02", 449, [VEG], "Fresh blueberries punnet", ["Sunrise"]),
    ("Fresh Basil", "produce", "S01", 189, [VEG, "organic"], "Living basil pot", ["Green Valley"]),
    ("Ginger Root", "produce", "S01", 119, [VEG], "Fresh ginger root per kilo", ["Aisle Basics"]),
    # more protein options
    ("Lamb Mince", "meat", "S08", 849, ["meat"], "Lamb mince 500g", ["Countryside"]),
    ("Smoked Salmon", "fish", "S09", 649, ["fish"], "Cold smoked salmon slices", ["Blue Harbor"]),
    ("Black Beans", "pantry", "S17", 139, [VEG, "high_fiber"], "Cooked black beans can", ["Aisle Basics", "Green Valley"]),
    ("Kidney Beans", "pantry", "S17", 139, [VEG, "high_fiber"], "Red kidney beans can", ["Aisle Basics"]),
    # hardware corner (S23)
    ("Screwdriver", "hardware", "S23", 599, [], "Phillips head screwdriver medium", ["Thrifty"]),
    ("Light Bulbs", "hardware", "S23", 379, [], "Warm white LED bulbs 2 pack", ["Prima", "Thrifty"]),
    ("Picture Hooks", "hardware", "S23", 189, [], "Assorted picture hanging hooks", ["Thrifty"]),
    ("Super Glue", "hardware", "S23", 249, [], "Instant super glue tube", ["Thrifty"]),
    # deliberately unmapped shelf, exercises unroutable reporting
    ("Seasonal Gift Basket", "seasonal", "S99", 1999, [VEG], "Assorted seasonal gift basket", ["Golden Crown"]),
]

# Price offsets by brand position keep multi-brand rows distinct but stable.
_BRAND_OFFSETS = [0, 30, -20, 55]


def build_catalog_rows() -> list[list[str]]:
    rows = []
    counter = 1
    for name, category, shelf, price, tags, description, brands in ITEMS:
        for i, brand in enumerate(brands):
            pid = f"P{counter:03d}"
            counter += 1
            rows.append([
                pid, name, brand, category,
                str(max(price + _BRAND_OFFSETS[i], 49)),
                shelf, ";".join(tags), description,
            ])
    return rows


# ---------------------------------------------------------------------------
# Corpus
# ---------------------------------------------------------------------------

DISHES = [
    "a cake", "a chocolate cake", "lasagna", "tacos", "pancakes", "a curry",
    "vegetable soup", "a big salad", "pizza from scratch", "brownies",
    "a birthday dinner", "a picnic", "a barbecue", "sunday breakfast",
    "a pasta dinner", "banana bread", "cookies", "a smoothie", "chili",
    "a stir fry", "risotto", "an omelette", "fruit punch", "a cheese platter",
]

PRODUCT_WORDS = [
    "organic spinach", "spinach", "whole wheat flour", "all-purpose flour",
    "almond flour", "eggs", "whole milk", "oat milk", "butter", "cheddar cheese",
    "baking powder", "vanilla extract", "white sugar", "cocoa powder",
    "chocolate chips", "bacon", "chicken breast", "salmon", "canned tuna",
    "bran flakes", "muesli", "rolled oats", "peanut butter", "honey",
    "orange juice", "ground coffee", "green tea", "potato chips", "almonds",
    "spaghetti", "basmati rice", "quinoa", "red lentils", "olive oil",
    "soy sauce", "sea salt", "tofu", "dish soap", "paper towels", "a screwdriver",
    "light bulbs", "gummy bears", "dark chocolate", "greek yogurt", "bagels",
]

HIGH_TEMPLATES = [
    "I want to bake {}",
    "I want to make {} this weekend",
    "Help me plan {} for my family",
    "What do I need for {}?",
    "I'm cooking {} for six people, what should I buy?",
    "Can you put together everything for {}?",
    "I'd like to prepare {} tonight",
    "We are hosting {} next week, help me shop for it",
]

LOW_TEMPLATES = [
    "How much does {} cost?",
    "Where can I find {}?",
    "Do you have {} in stock?",
    "What's the price of {}?",
    "Is there a cheaper alternative to {}?",
    "Show me the options for {}",
    "Which aisle has {}?",
    "What brands of {} do you carry?",
]

MODIFY_TEMPLATES = [
    "Remove the {} from my list",
    "Add {} to my cart",
    "Add two packs of {} to the list",
    "Take {} off the list please",
    "Make it three of the {}",
    "Set the {} to two",
    "Swap the {} for something else",
    "Drop the {} from my cart",
]

MISC_STATEMENTS = [
    "Thank you", "Thanks a lot", "Yes, please", "No, that's all", "Hello",
    "Hi there", "Good morning", "Sounds good", "Okay", "Great, thanks",
    "Goodbye", "That's perfect", "You're very helpful", "Hmm, let me think",
    "One moment please", "Alright", "Never mind", "That works for me",
    "Perfect", "I appreciate it", "No thanks", "Sure", "Fine by me",
    "Looks good to me", "Let me check my pantry first", "Give me a second",
    "All done", "That will be everything", "Wonderful", "Cheers",
    "Much appreciated", "You too", "See you later", "Have a nice day",
    "Understood", "Right", "Of course", "Absolutely", "My pleasure",
    "Say that again?", "Sorry, what?", "Interesting", "Good to know",
    "I see", "Got it", "Makes sense", "Noted", "Will do", "Happy to hear that",
    "Take care",
]

# The two deliberately ambiguous turns ship with their acceptable alternates.
AMBIGUOUS = [
    ("Sure, add that to my cart.", "miscellaneous", "modify"),
    ("I need to replace my usual breakfast cereal with a high fiber option, which one?", "low", "high"),
]


def build_corpus_rows() -> list[list[str]]:
    rows = []
    high = [t.format(d) for d in DISHES for t in HIGH_TEMPLATES[:4]]  # 24*4 = 96
    low = [t.format(p) for p, t in zip(PRODUCT_WORDS * 3, LOW_TEMPLATES * 45)][:118]
    modify = [t.format(p) for p, t in zip(PRODUCT_WORDS[::-1] * 3, MODIFY_TEMPLATES * 45)][:90]
    misc = list(MISC_STATEMENTS)  # 50

    for text in high:
        rows.append([text, "high", ""])
    for text in low:
        rows.append([text, "low", ""])
    for text in modify:
        rows.append([text, "modify", ""])
    for text in misc:
        rows.append([text, "miscellaneous", ""])
    for text, gold, alt in AMBIGUOUS:
        rows.append([text, gold, alt])
    return rows


# ---------------------------------------------------------------------------
# Shelf map
# ---------------------------------------------------------------------------

SHELF_MAP = """\
# Shelf poses for the demo store, metres from the south-west corner.
start: {x: 0.0, y: 0.0}
shelves:
  S01: {x: 2.0, y: 2.0, yaw: 0.0}
  S02: {x: 2.0, y: 5.0, yaw: 0.0}
  S03: {x: 2.0, y: 8.0, yaw: 0.0}
  S04: {x: 5.0, y: 2.0, yaw: 1.57}
  S05: {x: 5.0, y: 5.0, yaw: 1.57}
  S06: {x: 5.0, y: 8.0, yaw: 1.57}
  S07: {x: 8.0, y: 2.0, yaw: 0.0}
  S08: {x: 8.0, y: 5.0, yaw: 0.0}
  S09: {x: 8.0, y: 8.0, yaw: 0.0}
  S10: {x: 11.0, y: 2.0, yaw: -1.57}
  S11: {x: 11.0, y: 5.0, yaw: -1.57}
  S12: {x: 11.0, y: 8.0, yaw: -1.57}
  S13: {x: 14.0, y: 2.0, yaw: 0.0}
  S14: {x: 14.0, y: 5.0, yaw: 0.0}
  S15: {x: 14.0, y: 8.0, yaw: 0.0}
  S16: {x: 17.0, y: 2.0, yaw: 3.14}
  S17: {x: 17.0, y: 5.0, yaw: 3.14}
  S18: {x: 17.0, y: 8.0, yaw: 3.14}
  S19: {x: 2.0, y: 12.0, yaw: 0.0}
  S20: {x: 5.0, y: 12.0, yaw: 0.0}
  S21: {x: 8.0, y: 12.0, yaw: 0.0}
  S22: {x: 11.0, y: 12.0, yaw: 0.0}
  S23: {x: 14.0, y: 12.0, yaw: 0.0}
"""

TAG_RULES = {
    "diet_conflicts": {
        "vegetarian": ["meat", "fish", "gelatin"],
        "vegan": ["meat", "fish", "dairy", "egg", "honey", "gelatin"],
        "pescatarian": ["meat"],
    },
    "preference_matches": {
        "health_conscious": ["whole_grain", "high_fiber", "low_sugar", "organic"],
        "budget": ["value"],
        "local": ["local"],
    },
}

# ---------------------------------------------------------------------------
# Prompt templates ($-placeholders; braces stay literal for the JSON examples)
# ---------------------------------------------------------------------------

HIGH_PROMPT = """\
You are the planning assistant of a supermarket. Shopper profile: $profile
Work out what the shopper wants to make or organise. Ask one short clarifying
question at a time about flavours, dietary needs, and what they already have
at home. When you know enough, produce the rough list of item names they
still need to buy.
Reply with exactly one JSON envelope and nothing else:
- follow-up question: {"type":"ask","text":"..."}
- finished rough list: {"type":"items","items":["...","..."]}
"""

MEDIUM_PROMPT = """\
You compose the final shopping list for a supermarket assistant. You never
talk to the shopper directly. Shopper profile: $profile
Rough items wanted:
$rough_items
Products retrieved from the catalog (the only products that exist):
$retrieved_products
Select the single best product for each rough item, preferring entries whose
notes match the shopper profile, and explain each choice briefly.
Reply with exactly one JSON envelope and nothing else:
{"type":"list","entries":[{"product_id":"...","reason":"..."}]}
Use only product ids listed above.
"""

LOW_PROMPT = """\
You are the counter assistant of a supermarket. You answer direct questions
about products and edit the shopping list on request. Shopper profile: $profile
Current cart:
$cart
Products retrieved for this request (the only products that exist):
$retrieved_products
Reply with exactly one JSON envelope and nothing else:
{"type":"answer","text":"...","cart_ops":[{"op":"add","product_id":"...","qty":1}]}
cart_ops may be empty; allowed ops are add, remove (no qty) and set_qty.
Never mention products that are not listed above or in the cart.
"""


def main():
    DATA.mkdir(parents=True, exist_ok=True)
    (DATA / "prompts").mkdir(exist_ok=True)

    catalog_rows = build_catalog_rows()
    with io.StringIO() as buf:
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["id", "name", "brand", "category", "price_cents", "shelf_id", "tags", "description"])
        writer.writerows(catalog_rows)
        (DATA / "catalog.csv").write_text(buf.getvalue(), encoding="utf-8")

    corpus_rows = build_corpus_rows()
    with io.StringIO() as buf:
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["text", "gold", "alternates"])
        writer.writerows(corpus_rows)
        (DATA / "corpus.csv").write_text(buf.getvalue(), encoding="utf-8")

    (DATA / "shelf_map.yaml").write_text(SHELF_MAP, encoding="utf-8")
    (DATA / "tag_rules.json").write_text(json.dumps(TAG_RULES, indent=2) + "\n", encoding="utf-8")
    (DATA / "prompts" / "high.txt").write_text(HIGH_PROMPT, encoding="utf-8")
    (DATA / "prompts" / "medium.txt").write_text(MEDIUM_PROMPT, encoding="utf-8")
    (DATA / "prompts" / "low.txt").write_text(LOW_PROMPT, encoding="utf-8")

    corpus = read_corpus((DATA / "corpus.csv").read_text(encoding="utf-8"))
    train_set, validation, test = split_corpus(corpus, seed=0)
    model = train(train_set)
    (DATA / "model.json").write_text(model.to_json(), encoding="utf-8")

    print(f"catalog: {len(catalog_rows)} products")
    print(f"corpus: {len(corpus_rows)} queries (train {len(train_set)}, val {len(validation)}, test {len(test)})")


if __name__ == "__main__":
    main()
