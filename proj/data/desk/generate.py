#!/usr/bin/env python3
"""Generates the small synthetic desk datasets used by tests and the sample
configs: an en-de document corpus, en-de and en-fr contrastive pronoun sets,
and German gender lexicons.

Output is deterministic; rerun after editing the word lists.
"""

import json
import random
from pathlib import Path

OUT = Path(__file__).resolve().parent

# (english, german, gender)
NOUNS_DE = [
    ("table", "Tisch", "masc"), ("chair", "Stuhl", "masc"), ("dog", "Hund", "masc"),
    ("key", "Schlüssel", "masc"), ("computer", "Computer", "masc"), ("coat", "Mantel", "masc"),
    ("suitcase", "Koffer", "masc"), ("carpet", "Teppich", "masc"), ("oven", "Ofen", "masc"),
    ("cupboard", "Schrank", "masc"), ("spoon", "Löffel", "masc"), ("fridge", "Kühlschrank", "masc"),
    ("lamp", "Lampe", "fem"), ("cat", "Katze", "fem"), ("bag", "Tasche", "fem"),
    ("clock", "Uhr", "fem"), ("jacket", "Jacke", "fem"), ("vase", "Vase", "fem"),
    ("bottle", "Flasche", "fem"), ("camera", "Kamera", "fem"), ("machine", "Maschine", "fem"),
    ("plant", "Pflanze", "fem"), ("cup", "Tasse", "fem"), ("box", "Kiste", "fem"),
    ("book", "Buch", "neut"), ("bike", "Fahrrad", "neut"), ("window", "Fenster", "neut"),
    ("picture", "Bild", "neut"), ("phone", "Handy", "neut"), ("car", "Auto", "neut"),
    ("bed", "Bett", "neut"), ("radio", "Radio", "neut"), ("sofa", "Sofa", "neut"),
    ("knife", "Messer", "neut"), ("shelf", "Regal", "neut"), ("tent", "Zelt", "neut"),
]

# Named antecedents carry a tag the basic lexicon does not know.
NAMES_DE = [("Bello", "masc"), ("Mimi", "fem"), ("Pixel", "neut")]

PRONOUN_DE = {"masc": "er", "fem": "sie", "neut": "es"}
DEF_NOM = {"masc": "Der", "fem": "Die", "neut": "Das"}
DEF_ACC = {"masc": "den", "fem": "die", "neut": "das"}
INDEF_ACC = {"masc": "einen", "fem": "eine", "neut": "ein"}

# (english template, german template); {n}/{N} noun, {acc}/{nom}/{indef} articles
ANTECEDENT_DE = [
    ("We talked about the {n} yesterday.", "Wir sprachen gestern über {acc} {N}."),
    ("The {n} was in the kitchen.", "{nom} {N} war in der Küche."),
    ("My sister bought a {n}.", "Meine Schwester kaufte {indef} {N}."),
    ("Have you seen the {n}?", "Hast du {acc} {N} gesehen?"),
    ("Tom finally repaired the {n}.", "Tom reparierte endlich {acc} {N}."),
]
ANTECEDENT_NAME_DE = [
    ("We talked about {n} yesterday.", "Wir sprachen gestern über {N}."),
    ("Have you seen {n}?", "Hast du {N} gesehen?"),
]

# {P} capitalized pronoun, {p} lowercase
PRONOUN_SENT_DE = [
    ("It is very old.", "{P} ist sehr alt."),
    ("It was broken again.", "{P} war wieder kaputt."),
    ("I think it is too expensive.", "Ich glaube, {p} ist zu teuer."),
    ("Unfortunately, it did not work.", "Leider hat {p} nicht funktioniert."),
    ("It stood next to the door.", "{P} stand neben der Tür."),
    ("Now it is in the hallway.", "Jetzt ist {p} im Flur."),
]

FILLER = [
    ("The weather was nice.", "Das Wetter war schön.", "Il faisait beau."),
    ("We arrived late.", "Wir kamen spät an.", "Nous sommes arrivés tard."),
    ("Everyone was tired.", "Alle waren müde.", "Tout le monde était fatigué."),
    ("The train was full.", "Der Zug war voll.", "Le train était plein."),
    ("Nobody said anything.", "Niemand sagte etwas.", "Personne n'a rien dit."),
    ("It was a long day.", "Es war ein langer Tag.", "C'était une longue journée."),
    ("Then we had dinner.", "Dann aßen wir zu Abend.", "Ensuite, nous avons dîné."),
    ("My brother called me.", "Mein Bruder rief mich an.", "Mon frère m'a appelé."),
    ("The shop closes at 6 pm.", "Der Laden schließt um 18 Uhr.", "Le magasin ferme à 18 heures."),
    ("We stayed at home.", "Wir blieben zu Hause.", "Nous sommes restés à la maison."),
    ("The children were playing outside.", "Die Kinder spielten draußen.", "Les enfants jouaient dehors."),
    ("Anna laughed.", "Anna lachte.", "Anna a ri."),
]

# (english, french, gender)
NOUNS_FR = [
    ("book", "livre", "masc"), ("bike", "vélo", "masc"), ("phone", "téléphone", "masc"),
    ("bag", "sac", "masc"), ("coat", "manteau", "masc"), ("pen", "stylo", "masc"),
    ("armchair", "fauteuil", "masc"), ("painting", "tableau", "masc"),
    ("lamp", "lampe", "fem"), ("table", "table", "fem"), ("chair", "chaise", "fem"),
    ("car", "voiture", "fem"), ("suitcase", "valise", "fem"), ("window", "fenêtre", "fem"),
    ("cup", "tasse", "fem"), ("key", "clé", "fem"),
]
PRONOUN_FR = {"masc": "il", "fem": "elle"}
ANTECEDENT_FR = [
    ("I bought a {n} yesterday.", "J'ai acheté {indef} {N} hier.", {"masc": "un", "fem": "une"}),
    ("The {n} was in the living room.", "{art} {N} était dans le salon.", {"masc": "Le", "fem": "La"}),
    ("Have you seen my {n}?", "As-tu vu {art} {N} ?", {"masc": "mon", "fem": "ma"}),
]
PRONOUN_SENT_FR = [
    ("It is in the kitchen.", "{P} est dans la cuisine."),
    ("Yesterday, it was there.", "Hier, {p} était là."),
    ("It costs too much.", "{P} coûte trop cher."),
    ("Now it is in the hallway.", "Maintenant, {p} est dans le couloir."),
]


def cp_index(s, sub):
    i = s.index(sub)
    return i, i + len(sub)


def build_de(rng, n):
    examples = []
    genders = ["masc", "fem", "neut"]
    for i in range(n):
        gender = genders[i % 3]
        rare = i % 500 == 250
        if rare:
            word, gender = NAMES_DE[(i // 500) % len(NAMES_DE)]
            en_noun, pos = word, "NE"
            en_t, de_t = rng.choice(ANTECEDENT_NAME_DE)
            ante_en = en_t.format(n=word)
            ante_de = de_t.format(N=word)
        else:
            cands = [x for x in NOUNS_DE if x[2] == gender]
            en_noun, word, _ = rng.choice(cands)
            pos = "NN"
            en_t, de_t = rng.choice(ANTECEDENT_DE)
            ante_en = en_t.format(n=en_noun)
            ante_de = de_t.format(N=word, nom=DEF_NOM[gender], acc=DEF_ACC[gender], indef=INDEF_ACC[gender])
        src, tgt_t = rng.choice(PRONOUN_SENT_DE)
        pron = PRONOUN_DE[gender]

        def fill(p):
            return tgt_t.format(P=p.capitalize(), p=p)

        others = [g for g in genders if g != gender]
        distance = 1 + (i // 3) % 2
        fillers = rng.sample(FILLER, 5)
        context = [{"src": f[0], "tgt": f[1]} for f in fillers[:4]]
        context.append({"src": fillers[4][0], "tgt": fillers[4][1]})
        idx = len(context) - distance
        context[idx] = {"src": ante_en, "tgt": ante_de}
        s0, s1 = cp_index(ante_de, word)
        e0, e1 = cp_index(ante_en, en_noun)
        examples.append({
            "example_id": f"de-{i:04d}",
            "src": src,
            "gold_target": fill(pron),
            "contrastive_targets": [fill(PRONOUN_DE[g]) for g in others],
            "gold_pronoun": pron,
            "contrastive_pronouns": [PRONOUN_DE[g] for g in others],
            "context": context,
            "antecedent_spans": [
                {"side": "target", "index": idx, "start": s0, "end": s1},
                {"side": "source", "index": idx, "start": e0, "end": e1},
            ],
            "antecedent_pos": pos,
            "antecedent_gender": gender,
        })
    return examples


def build_fr(rng, n):
    examples = []
    genders = ["masc", "fem"]
    for i in range(n):
        gender = genders[i % 2]
        en_noun, word, _ = rng.choice([x for x in NOUNS_FR if x[2] == gender])
        en_t, fr_t, arts = rng.choice(ANTECEDENT_FR)
        ante_en = en_t.format(n=en_noun)
        ante_fr = fr_t.format(N=word, indef=arts[gender], art=arts[gender])
        src, tgt_t = rng.choice(PRONOUN_SENT_FR)
        pron = PRONOUN_FR[gender]
        other = "fem" if gender == "masc" else "masc"

        def fill(p):
            return tgt_t.format(P=p.capitalize(), p=p)

        fillers = rng.sample(FILLER, 5)
        context = [{"src": f[0], "tgt": f[2]} for f in fillers]
        distance = 1 + (i // 2) % 2
        idx = len(context) - distance
        context[idx] = {"src": ante_en, "tgt": ante_fr}
        s0, s1 = cp_index(ante_fr, word)
        examples.append({
            "example_id": f"fr-{i:04d}",
            "src": src,
            "gold_target": fill(pron),
            "contrastive_targets": [fill(PRONOUN_FR[other])],
            "gold_pronoun": pron,
            "contrastive_pronouns": [PRONOUN_FR[other]],
            "context": context,
            "antecedent_spans": [{"side": "target", "index": idx, "start": s0, "end": s1}],
            "antecedent_pos": "NN",
            "antecedent_gender": gender,
        })
    return examples


# Document corpus: short stories with numbers, quotes and punctuation that
# exercise the BLEU tokenizer.
DOCS = [
    ("talk-01", [
        ("When I was a kid, my parents would tell me, \"You can make a mess, but you have to clean up after yourself.\"",
         "Als Kind sagten mir meine Eltern immer: \"Du kannst Unordnung machen, solange du hinterher aufräumst.\""),
        ("So freedom came with responsibility.", "Freiheit war also mit Verantwortung verbunden."),
        ("But my imagination would take me to all these wonderful places, where everything was possible.",
         "Aber meine Fantasie eröffnete mir viele wunderbaren Orte, an denen alles möglich war."),
        ("I was 7 years old & very curious.", "Ich war 7 Jahre alt & sehr neugierig."),
        ("My father worked from 9-5 every day.", "Mein Vater arbeitete jeden Tag von 9-5."),
        ("He earned 1,200 dollars a month.", "Er verdiente 1.200 Dollar im Monat."),
        ("My mother said, \"Read more books!\"", "Meine Mutter sagte: \"Lies mehr Bücher!\""),
        ("So I read - a lot.", "Also las ich - sehr viel."),
        ("By the age of 12, I had read 300 books.", "Mit 12 Jahren hatte ich 300 Bücher gelesen."),
        ("Some were boring; most were great.", "Manche waren langweilig; die meisten waren großartig."),
        ("(I still remember the first one.)", "(Ich erinnere mich noch an das erste.)"),
        ("It was about a girl on Mars.", "Es handelte von einem Mädchen auf dem Mars."),
        ("She built a house out of red stones.", "Sie baute ein Haus aus roten Steinen."),
        ("Years later, I became an engineer.", "Jahre später wurde ich Ingenieurin."),
        ("Thank you.", "Vielen Dank."),
    ]),
    ("talk-02", [
        ("Before becoming a writer, Nora was a financial planner.", "Bevor sie Autorin wurde, war Nora Finanzplanerin."),
        ("She had to learn the finer mechanics of sales when she was starting her practice, and this skill now helps her write compelling pitches to editors.",
         "Sie musste die Feinheiten des Verkaufs lernen, als sie ihre Praxis gründete, und diese Fähigkeit hilft ihr jetzt, überzeugende Angebote an Redakteure zu schreiben."),
        ("Her first article paid 150 euros.", "Ihr erster Artikel brachte 150 Euro ein."),
        ("Today she earns about 4.5 times as much.", "Heute verdient sie etwa 4,5 Mal so viel."),
        ("\"Writing is a business,\" she says.", "\"Schreiben ist ein Geschäft\", sagt sie."),
        ("Her clients include small & large firms.", "Zu ihren Kunden gehören kleine & große Firmen."),
        ("She works 6 days a week.", "Sie arbeitet 6 Tage pro Woche."),
        ("On Sundays, she rests.", "Sonntags ruht sie sich aus."),
        ("Her advice: start small, then grow.", "Ihr Rat: klein anfangen, dann wachsen."),
        ("Most writers give up too early.", "Die meisten Autoren geben zu früh auf."),
        ("Nora did not.", "Nora nicht."),
        ("In 2019, she published her first book.", "Im Jahr 2019 veröffentlichte sie ihr erstes Buch."),
        ("It sold 10,000 copies.", "Es verkaufte sich 10.000 Mal."),
        ("Her second book is due in May.", "Ihr zweites Buch erscheint im Mai."),
        ("She is already planning a third.", "Sie plant bereits ein drittes."),
    ]),
    ("talk-03", [
        ("Let me tell you about the ocean.", "Lassen Sie mich Ihnen vom Ozean erzählen."),
        ("It covers 71% of our planet.", "Er bedeckt 71 % unseres Planeten."),
        ("Yet we have explored less than 5% of it.", "Doch wir haben weniger als 5 % davon erforscht."),
        ("The deepest point is about 11,000 metres down.", "Der tiefste Punkt liegt etwa 11.000 Meter tief."),
        ("Only a few people have been there.", "Nur wenige Menschen waren dort."),
        ("What did they find?", "Was haben sie gefunden?"),
        ("Plastic - even at the bottom.", "Plastik - sogar am Grund."),
        ("That shocked me.", "Das hat mich schockiert."),
        ("Every year, 8 million tonnes of plastic enter the sea.", "Jedes Jahr gelangen 8 Millionen Tonnen Plastik ins Meer."),
        ("Fish eat it; we eat the fish.", "Fische fressen es; wir essen die Fische."),
        ("So what can we do?", "Was können wir also tun?"),
        ("First, use less plastic.", "Erstens: weniger Plastik verwenden."),
        ("Second, support clean-up projects.", "Zweitens: Aufräumprojekte unterstützen."),
        ("Third, tell your friends & family.", "Drittens: Erzählen Sie es Freunden & Familie."),
        ("The ocean needs us.", "Der Ozean braucht uns."),
    ]),
    ("talk-04", [
        ("I grew up in a small town.", "Ich bin in einer kleinen Stadt aufgewachsen."),
        ("It had one school, one shop and 2,000 people.", "Sie hatte eine Schule, einen Laden und 2.000 Einwohner."),
        ("Everybody knew everybody.", "Jeder kannte jeden."),
        ("My grandmother ran the shop.", "Meine Großmutter führte den Laden."),
        ("She opened at 7.30 every morning.", "Sie öffnete jeden Morgen um 7.30 Uhr."),
        ("Bread cost 1.50 back then.", "Brot kostete damals 1,50."),
        ("\"Prices go up, people stay,\" she used to say.", "\"Die Preise steigen, die Menschen bleiben\", pflegte sie zu sagen."),
        ("When she retired, the shop closed.", "Als sie in Rente ging, schloss der Laden."),
        ("The town felt empty.", "Die Stadt fühlte sich leer an."),
        ("Young people moved away.", "Junge Leute zogen weg."),
        ("I did, too.", "Ich auch."),
        ("Ten years later, I came back.", "Zehn Jahre später kam ich zurück."),
        ("I reopened the shop.", "Ich eröffnete den Laden wieder."),
        ("Now it is a café & a library.", "Jetzt ist es ein Café & eine Bibliothek."),
        ("People come back, too.", "Auch die Menschen kommen zurück."),
    ]),
    ("talk-05", [
        ("Have you ever been truly lost?", "Haben Sie sich jemals wirklich verirrt?"),
        ("I have - in the desert.", "Ich schon - in der Wüste."),
        ("My GPS stopped working at 3 pm.", "Mein GPS funktionierte um 15 Uhr nicht mehr."),
        ("I had 2 litres of water.", "Ich hatte 2 Liter Wasser."),
        ("The temperature was 45 degrees.", "Die Temperatur betrug 45 Grad."),
        ("I panicked.", "Ich geriet in Panik."),
        ("Then I remembered my training.", "Dann erinnerte ich mich an meine Ausbildung."),
        ("Stop, think, observe, plan.", "Anhalten, nachdenken, beobachten, planen."),
        ("I waited for the sun to set.", "Ich wartete, bis die Sonne unterging."),
        ("At night, the stars showed me the way.", "In der Nacht zeigten mir die Sterne den Weg."),
        ("I walked for 6 hours.", "Ich lief 6 Stunden lang."),
        ("At dawn, I saw a road.", "Im Morgengrauen sah ich eine Straße."),
        ("A truck driver picked me up.", "Ein Lastwagenfahrer nahm mich mit."),
        ("He said, \"You are lucky.\"", "Er sagte: \"Sie haben Glück.\""),
        ("He was right.", "Er hatte recht."),
    ]),
    ("talk-06", [
        ("Music changed my life.", "Musik hat mein Leben verändert."),
        ("I started playing the piano at 5.", "Ich habe mit 5 angefangen, Klavier zu spielen."),
        ("My teacher was very strict.", "Meine Lehrerin war sehr streng."),
        ("I practised 2 hours a day.", "Ich übte 2 Stunden am Tag."),
        ("Sometimes I hated it.", "Manchmal hasste ich es."),
        ("But at 15, I played my first concert.", "Aber mit 15 spielte ich mein erstes Konzert."),
        ("There were 300 people in the hall.", "Im Saal waren 300 Menschen."),
        ("My hands were shaking.", "Meine Hände zitterten."),
        ("Then the music took over.", "Dann übernahm die Musik."),
        ("I forgot the audience.", "Ich vergaß das Publikum."),
        ("When I finished, there was silence.", "Als ich fertig war, herrschte Stille."),
        ("Then: applause!", "Dann: Applaus!"),
        ("Today I teach children & adults.", "Heute unterrichte ich Kinder & Erwachsene."),
        ("I tell them: \"Keep going.\"", "Ich sage ihnen: \"Macht weiter.\""),
        ("Music is patience.", "Musik ist Geduld."),
    ]),
    ("talk-07", [
        ("Our city has a traffic problem.", "Unsere Stadt hat ein Verkehrsproblem."),
        ("Every day, 400,000 cars enter the centre.", "Jeden Tag fahren 400.000 Autos ins Zentrum."),
        ("The average speed is 12 km/h.", "Die Durchschnittsgeschwindigkeit beträgt 12 km/h."),
        ("That is slower than a bicycle.", "Das ist langsamer als ein Fahrrad."),
        ("So we built bike lanes.", "Also haben wir Radwege gebaut."),
        ("At first, people complained.", "Zuerst beschwerten sich die Leute."),
        ("\"Where will we park?\" they asked.", "\"Wo sollen wir parken?\", fragten sie."),
        ("After 2 years, the numbers changed.", "Nach 2 Jahren änderten sich die Zahlen."),
        ("Cycling rose by 35%.", "Der Radverkehr stieg um 35 %."),
        ("Accidents fell by a third.", "Die Unfälle gingen um ein Drittel zurück."),
        ("Shops in the centre earned more.", "Die Läden im Zentrum verdienten mehr."),
        ("The air got cleaner.", "Die Luft wurde sauberer."),
        ("Other cities are now copying us.", "Andere Städte kopieren uns jetzt."),
        ("Change is possible.", "Veränderung ist möglich."),
        ("It just takes time.", "Es braucht nur Zeit."),
    ]),
    ("talk-08", [
        ("I want to talk about sleep.", "Ich möchte über Schlaf sprechen."),
        ("Most adults need 7-9 hours.", "Die meisten Erwachsenen brauchen 7-9 Stunden."),
        ("Many get fewer than 6.", "Viele bekommen weniger als 6."),
        ("Why does that matter?", "Warum ist das wichtig?"),
        ("Sleep repairs the body & the brain.", "Schlaf repariert den Körper & das Gehirn."),
        ("Without it, we forget things.", "Ohne ihn vergessen wir Dinge."),
        ("We also get sick more often.", "Wir werden auch öfter krank."),
        ("In one study, 150 students slept less for a week.", "In einer Studie schliefen 150 Studierende eine Woche lang weniger."),
        ("Their test scores dropped by 20%.", "Ihre Testergebnisse sanken um 20 %."),
        ("So here is my advice.", "Hier ist also mein Rat."),
        ("Go to bed at the same time.", "Gehen Sie zur gleichen Zeit ins Bett."),
        ("Put your phone away.", "Legen Sie Ihr Handy weg."),
        ("Keep the room cool - about 18 degrees.", "Halten Sie das Zimmer kühl - etwa 18 Grad."),
        ("And don't drink coffee after 2 pm.", "Und trinken Sie nach 14 Uhr keinen Kaffee."),
        ("Good night!", "Gute Nacht!"),
    ]),
]


def write_jsonl(path, records):
    with open(path, "w", encoding="utf-8") as f:
        for r in records:
            f.write(json.dumps(r, ensure_ascii=False) + "\n")


def main():
    rng = random.Random(20240607)
    write_jsonl(OUT / "corpus_en_de.jsonl",
                [{"doc_id": d, "sentences": [{"src": s, "tgt": t} for s, t in sents]} for d, sents in DOCS])
    write_jsonl(OUT / "contrastive_en_de.jsonl", build_de(rng, 500))
    write_jsonl(OUT / "contrastive_en_fr.jsonl", build_fr(rng, 200))

    header = "# word\tpos\tgender\n"
    basic = "".join(f"{de}\tNN\t{g}\n" for _, de, g in NOUNS_DE)
    (OUT / "lexicon_de.tsv").write_text(header + basic, encoding="utf-8")
    names = "".join(f"{n}\tNE\t{g}\n" for n, g in NAMES_DE)
    (OUT / "lexicon_de_full.tsv").write_text(header + basic + names, encoding="utf-8")


if __name__ == "__main__":
    main()
